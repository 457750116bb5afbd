#pragma once

#include "adpc/core/resource.h"
#include "adpc/store/origin.h"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adpc::harness {

// Scenario file:
//   {name, origins:[{origin, supportsAdpc, requests}], steps:[{op, args}], assertions:[{kind, args}]}
//
// Step ops:
//   visit             {origin, path?, times?}
//   user_decide       {origin, consent?, refuse?, withdraw?, object?, generals?, expectError?}
//   controller_update {origin, requests}
//   policy_add        policy rule without id
//   advance_time      {days?, hours?, minutes?, seconds?}
//   sync              {origin}
//   raw_request       {origin, path?, method?, adpc?, body?}  sent by the script, not the agent
//   check             {kind, args}  an assertion evaluated at this point
//
// Assertion kinds:
//   status         {origin, id, expected}       stored RequestStatus
//   traffic_absent {origin, field?}             no agent request carried the field (default ADPC)
//   granted        {origin, id, expected}       controller's permissions on the last page request
//   ack_matched    {origin}                     last sent signal acked with its digest
//   chain_valid    {}                           agent receipts and every controller audit verify
//   marker         {origin, present}            analytics marker and cookie on the last page
//   prompt         {origin, ids}                pending prompt ids ([] for none)
//   field          {origin, expected}           what the agent would send now (null for nothing)
//   sent           {origin, expected}           ADPC value of the last agent page request
//   support        {origin, expected}           cached support state
//   audit          {origin, contains}           some controller audit payload contains the text
struct OriginSpec {
  Origin origin;
  bool supports_adpc = false;
  std::optional<ConsentRequestsList> requests;
};

struct Step {
  std::string op;
  nlohmann::json args;
};

struct Assertion {
  std::string kind;
  nlohmann::json args;
};

struct Scenario {
  std::string name;
  std::vector<OriginSpec> origins;
  std::vector<Step> steps;
  std::vector<Assertion> assertions;
};

// Throws Error(kScenario).
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& file);

struct Failure {
  std::optional<std::size_t> step;       // 1-based
  std::optional<std::size_t> assertion;  // 1-based
  std::string kind;                      // op or assertion kind
  std::string message;
};

struct Report {
  std::string name;
  bool pass = true;
  std::vector<Failure> failures;
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
};

nlohmann::ordered_json to_json(const Report& r);

// Fresh agent, store, controllers and virtual clock (2024-01-01T00:00:00Z)
// per call. Step errors become failures.
Report run_scenario(const Scenario& s);

struct SuiteResult {
  std::vector<Report> reports;
  int exit_code = 0;  // 0 all pass, 1 any failure, 2 no scenarios

  std::size_t passed() const;
  nlohmann::ordered_json summary() const;
};

// `path` is a scenario file or a directory of *.json files (run in name
// order). Throws Error(kIo) when it does not exist.
SuiteResult run_suite(const std::filesystem::path& path);

}  // namespace adpc::harness
