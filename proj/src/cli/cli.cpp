#include "adpc/cli/cli.h"

#include "adpc/agent/agent.h"
#include "adpc/core/error.h"
#include "adpc/core/grammar.h"
#include "adpc/http/network_client.h"
#include "adpc/store/atomic_file.h"
#include "adpc/store/decision_store.h"
#include "adpc/store/policy.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace adpc::cli {

namespace {

// Raised while validating arguments, before anything touches the profile.
struct UsageError {
  std::string message;
};

struct Options {
  bool json = false;
  bool wait = false;
  std::string profile;

  std::string url;  // probe
  std::string origin;  // requests, decide
  std::vector<std::string> consent, refuse, withdraw, object, generals;

  std::string pattern;  // policy add
  bool whitelist = false;
  bool blacklist = false;
  std::vector<std::string> ids;
  int threshold = 0;
  int window_days = 1;
  std::uint64_t policy_id = 0;  // policy remove

  std::string receipts_origin;
  std::string out_file;

  std::string sim_path;
};

Origin parse_origin_arg(const std::string& value) {
  try {
    return Origin::parse(value);
  } catch (const Error& e) {
    throw UsageError{std::string(to_string(e.code())) + ": " + e.detail()};
  }
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

PolicyRule policy_from_options(const Options& o) {
  const int actions = int(o.whitelist) + int(o.blacklist) + int(o.threshold > 0);
  if (actions != 1) throw UsageError{"policy add needs exactly one of --whitelist, --blacklist, --prompt-after"};
  if (!o.ids.empty() && !o.whitelist) throw UsageError{"--ids only applies to --whitelist"};

  PolicyRule rule;
  rule.pattern = o.pattern;
  if (o.whitelist) {
    Whitelist w;
    if (!o.ids.empty()) {
      w.ids.emplace();
      for (const auto& id : o.ids) {
        if (!RequestId::is_valid(id)) throw UsageError{"invalid request id '" + id + "'"};
        w.ids->insert(RequestId(id));
      }
    }
    rule.action = w;
  } else if (o.blacklist) {
    rule.action = Blacklist{};
  } else {
    rule.action = PromptThreshold{o.threshold, o.window_days};
  }
  try {
    validate(rule);
  } catch (const Error& e) {
    throw UsageError{std::string(to_string(e.code())) + ": " + e.detail()};
  }
  return rule;
}

std::string render_rule(const PolicyRule& rule) {
  std::ostringstream s;
  s << rule.id << "  " << rule.pattern << "  ";
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Whitelist>) {
          s << "whitelist ";
          if (!a.ids) {
            s << "all";
          } else {
            bool first = true;
            for (const auto& id : *a.ids) s << (std::exchange(first, false) ? "" : ",") << id.str();
          }
        } else if constexpr (std::is_same_v<T, Blacklist>) {
          s << "blacklist";
        } else {
          s << "prompt after " << a.visits << " visit(s) in " << a.window_days << " day(s)";
        }
      },
      rule.action);
  return s.str();
}

std::string render_requests(const OriginRecord& rec) {
  std::ostringstream s;
  s << rec.origin.to_string() << "  version " << rec.requests->version() << "\n";
  auto row = [&](const ConsentRequest& r, Basis basis) {
    const RequestStatus st = rec.decisions.status(r.id).value_or(initial_status(basis));
    s << "  " << std::left << std::setw(20) << r.id.str() << " " << std::setw(13) << to_string(st) << " "
      << std::setw(20) << to_string(basis) << " " << r.text << "\n";
  };
  for (const auto& r : rec.requests->consent_requests()) row(r, Basis::kConsent);
  for (const auto& r : rec.requests->legitimate_interests()) row(r, Basis::kLegitimateInterest);
  if (rec.prompt) s << "  " << rec.prompt->items.size() << " item(s) awaiting a decision\n";
  return s.str();
}

class Session {
 public:
  Session(const Options& o, const Environment& env, std::ostream& err)
      : clock_(env.clock ? env.clock : &system_clock_),
        store_(open_store(o, *clock_)),
        client_(env.client ? env.client : &network_),
        agent_(store_, *client_, agent::AgentConfig{env.ttl.value_or(agent::AgentConfig{}.support_ttl)}),
        err_(err) {}

  agent::Agent& agent() { return agent_; }
  DecisionStore& store() { return store_; }
  std::ostream& err() { return err_; }

 private:
  static DecisionStore open_store(const Options& o, const Clock& clock) {
    return DecisionStore::open(o.profile, clock, StoreOptions{.durable = true, .wait_for_lock = o.wait});
  }

  SystemClock system_clock_;
  const Clock* clock_;
  DecisionStore store_;
  http::NetworkClient network_;
  http::Client* client_;
  agent::Agent agent_;
  std::ostream& err_;
};

int do_probe(Session& s, const Options& o, std::ostream& out) {
  const Origin origin = parse_origin_arg(o.url);
  s.agent().visit(o.url);
  const OriginRecord* rec = s.store().find(origin);
  const bool supported = rec && rec->support.supported_at(s.store().clock().now());
  if (o.json) {
    out << dump(agent::origin_summary_json(*rec));
  } else if (supported) {
    out << "SUPPORTED " << *rec->support.requests_url << "\n";
  } else {
    out << "UNSUPPORTED\n";
  }
  return kExitOk;
}

int do_requests(Session& s, const Options& o, std::ostream& out) {
  const Origin origin = parse_origin_arg(o.origin);
  const Instant now = s.store().clock().now();
  const OriginRecord* rec = s.store().find(origin);
  if (rec && rec->support.supported_at(now)) {
    try {
      s.agent().sync_requests(origin);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kFetch || !rec->requests) throw;
      s.err() << "warning: " << e.what() << "; showing the cached list\n";
    }
  } else {
    s.agent().visit(origin.to_string() + "/");
  }
  rec = s.store().find(origin);
  if (!rec || !rec->support.supported_at(now) || !rec->requests) {
    throw Error(ErrorCode::kNotSupported, origin.to_string() + " does not announce consent requests");
  }
  if (o.json) {
    nlohmann::ordered_json j = agent::origin_summary_json(*rec);
    j["requests"] = to_json(*rec->requests);
    j["prompt"] = rec->prompt ? to_json(*rec->prompt) : nlohmann::ordered_json();
    out << dump(j);
  } else {
    out << render_requests(*rec);
  }
  return kExitOk;
}

agent::DecisionInput decision_input(const Options& o) {
  agent::DecisionInput in{o.consent, o.refuse, o.withdraw, o.object, o.generals};
  try {
    in.to_signal_set();
  } catch (const Error& e) {
    throw UsageError{std::string(to_string(e.code())) + ": " + e.detail()};
  }
  return in;
}

int do_decide(Session& s, const Options& o, const agent::DecisionInput& in, std::ostream& out) {
  const SignalSet queued = s.agent().decide(parse_origin_arg(o.origin), in);
  const std::string text = serialize_signal_set(queued);
  if (o.json) {
    out << dump({{"queued", text}});
  } else {
    out << text << "\n";
  }
  return kExitOk;
}

int do_policy_list(Session& s, const Options& o, std::ostream& out) {
  if (o.json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& rule : s.store().policies()) j.push_back(to_json(rule));
    out << dump(j);
  } else {
    for (const auto& rule : s.store().policies()) out << render_rule(rule) << "\n";
  }
  return kExitOk;
}

int do_receipts(Session& s, const Options& o, std::ostream& out) {
  std::optional<Origin> filter;
  if (!o.receipts_origin.empty()) filter = parse_origin_arg(o.receipts_origin);
  const std::string receipts = s.store().export_receipts(filter);
  if (o.out_file.empty()) {
    out << receipts;
  } else {
    atomic_write_file(o.out_file, receipts);
    const auto lines = std::count(receipts.begin(), receipts.end(), '\n');
    if (!o.json) out << "wrote " << lines << " receipt(s) to " << o.out_file << "\n";
  }
  return kExitOk;
}

int do_verify(Session& s, const Options& o, std::ostream& out) {
  const ChainVerdict v = s.store().verify_chain();
  out << render_verdict(v, s.store().log().size(), o.json);
  return v.ok ? kExitOk : kExitFailure;
}

std::string default_profile(const Environment& env) {
  if (env.profile) return env.profile->string();
  const char* home = std::getenv("HOME");
  return (std::filesystem::path(home ? home : ".") / ".adpc").string();
}

}  // namespace

Environment environment_from_process() {
  Environment env;
  if (const char* p = std::getenv("ADPC_PROFILE"); p && *p) env.profile = p;
  if (const char* t = std::getenv("ADPC_TTL_SECONDS"); t && *t) {
    try {
      env.ttl = std::chrono::seconds{std::stoll(t)};
    } catch (const std::exception&) {
      // Ignored: the default TTL applies.
    }
  }
  return env;
}

std::string render_report(const harness::SuiteResult& result, bool json) {
  if (json) return dump(result.summary());
  std::ostringstream s;
  for (const auto& r : result.reports) {
    s << (r.pass ? "PASS  " : "FAIL  ") << r.name << "\n";
    for (const auto& f : r.failures) {
      s << "      ";
      if (f.step) s << "step " << *f.step;
      if (f.assertion) s << "assertion " << *f.assertion;
      if (!f.step && !f.assertion) s << "scenario";
      s << " (" << f.kind << "): " << f.message << "\n";
    }
  }
  if (result.reports.empty()) {
    s << "no scenarios found\n";
  } else {
    s << result.reports.size() << " scenario(s): " << result.passed() << " passed, "
      << result.reports.size() - result.passed() << " failed\n";
  }
  return s.str();
}

std::string render_verdict(const ChainVerdict& verdict, std::size_t events, bool json) {
  if (json) return dump(to_json(verdict, events));
  std::ostringstream s;
  if (verdict.ok) {
    s << "OK " << events << " event(s)\n";
  } else {
    s << "CORRUPT first bad seq " << verdict.first_bad_seq << ": " << verdict.reason << "\n";
  }
  return s.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env) {
  Options o;
  o.profile = default_profile(env);

  CLI::App app{"Consent signalling agent, receipts and conformance tools", "adpc"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json, "Machine-readable output");
  app.add_flag("--wait", o.wait, "Block while another process holds the profile");
  app.add_option("--profile", o.profile, "Profile directory (env ADPC_PROFILE, default ~/.adpc)");

  auto* probe = app.add_subcommand("probe", "Load a page and report whether the origin speaks ADPC");
  probe->add_option("url", o.url, "Page URL")->required();

  auto* requests = app.add_subcommand("requests", "Show an origin's consent requests and stored decisions");
  requests->add_option("origin", o.origin)->required();

  auto* decide = app.add_subcommand("decide", "Record decisions and queue them for the next request");
  decide->add_option("origin", o.origin)->required();
  decide->add_option("--consent", o.consent, "Request ids to consent to")->delimiter(',');
  decide->add_option("--refuse", o.refuse, "Request ids to refuse")->delimiter(',');
  decide->add_option("--withdraw", o.withdraw, "Request ids to withdraw")->delimiter(',');
  decide->add_option("--object", o.object, "Legitimate-interest purposes to object to")->delimiter(',');
  decide->add_option("--general", o.generals, "reject-all, withdraw-all, object-all, do-not-track, do-not-sell")
      ->delimiter(',');

  auto* policy = app.add_subcommand("policy", "Manage automation rules");
  policy->require_subcommand(1);
  auto* policy_add = policy->add_subcommand("add", "Add a rule");
  policy_add->add_option("pattern", o.pattern, "Host or *.suffix")->required();
  policy_add->add_flag("--whitelist", o.whitelist, "Consent automatically");
  policy_add->add_option("--ids", o.ids, "Whitelisted ids (default: all)")->delimiter(',');
  policy_add->add_flag("--blacklist", o.blacklist, "Refuse and object automatically");
  policy_add->add_option("--prompt-after", o.threshold, "Prompt only after this many visits")
      ->check(CLI::PositiveNumber);
  policy_add->add_option("--window", o.window_days, "Visit window in days")->check(CLI::PositiveNumber);
  auto* policy_list = policy->add_subcommand("list", "List rules");
  auto* policy_remove = policy->add_subcommand("remove", "Remove a rule");
  policy_remove->add_option("id", o.policy_id)->required();

  auto* receipts = app.add_subcommand("receipts", "Receipt log operations");
  receipts->require_subcommand(1);
  auto* receipts_export = receipts->add_subcommand("export", "Write receipts as JSON lines");
  receipts_export->add_option("--origin", o.receipts_origin, "Only this origin");
  receipts_export->add_option("--out", o.out_file, "Output file (default: stdout)");

  auto* verify = app.add_subcommand("verify", "Check the receipt hash chain");

  auto* sim = app.add_subcommand("sim", "Conformance harness");
  sim->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "Run a scenario file or directory");
  sim_run->add_option("path", o.sim_path)->required();

  auto usage = [&](const std::string& message) {
    err << "usage error: " << message << "\n" << app.help();
    return kExitUsage;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  }

  try {
    // Everything below validates arguments first and only then opens the profile.
    if (*sim) {
      const harness::SuiteResult result = harness::run_suite(o.sim_path);
      out << render_report(result, o.json);
      return result.exit_code;
    }

    std::optional<agent::DecisionInput> input;
    std::optional<PolicyRule> rule;
    if (*probe) parse_origin_arg(o.url);
    if (*requests || *decide) parse_origin_arg(o.origin);
    if (*decide) input = decision_input(o);
    if (*policy_add) rule = policy_from_options(o);
    if (*receipts_export && !o.receipts_origin.empty()) parse_origin_arg(o.receipts_origin);

    Session s(o, env, err);
    if (*probe) return do_probe(s, o, out);
    if (*requests) return do_requests(s, o, out);
    if (*decide) return do_decide(s, o, *input, out);
    if (*policy_add) {
      const PolicyRule added = s.store().add_policy(*rule);
      out << (o.json ? dump(to_json(added)) : render_rule(added) + "\n");
      return kExitOk;
    }
    if (*policy_list) return do_policy_list(s, o, out);
    if (*policy_remove) {
      if (!s.store().remove_policy(o.policy_id)) {
        err << "error: no policy with id " << o.policy_id << "\n";
        return kExitFailure;
      }
      out << (o.json ? dump({{"removed", o.policy_id}}) : "removed " + std::to_string(o.policy_id) + "\n");
      return kExitOk;
    }
    if (*receipts_export) return do_receipts(s, o, out);
    if (*verify) return do_verify(s, o, out);
    return usage("no command");
  } catch (const UsageError& e) {
    return usage(e.message);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::kLocked) err << "hint: pass --wait to block until the profile is free\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace adpc::cli
