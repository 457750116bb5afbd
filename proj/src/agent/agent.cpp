#include "adpc/agent/agent.h"

#include "adpc/core/digest.h"
#include "adpc/core/error.h"
#include "adpc/core/grammar.h"
#include "adpc/store/policy.h"

#include <spdlog/spdlog.h>

namespace adpc::agent {

SignalSet DecisionInput::to_signal_set() const {
  SignalSet s;
  for (const auto& g : generals) {
    const auto parsed = parse_general_signal(g);
    if (!parsed) throw Error(ErrorCode::kSyntax, "unknown general signal '" + g + "'");
    s.add(*parsed);
  }
  const std::pair<DirectiveKind, const std::vector<std::string>*> kinds[] = {
      {DirectiveKind::kConsent, &consent},
      {DirectiveKind::kRefuse, &refuse},
      {DirectiveKind::kWithdraw, &withdraw},
      {DirectiveKind::kObject, &object}};
  for (const auto& [kind, ids] : kinds) {
    for (const auto& id : *ids) {
      if (!RequestId::is_valid(id)) throw Error(ErrorCode::kSyntax, "invalid request id '" + id + "'");
      s.add(kind, id);
    }
  }
  if (s.empty()) throw Error(ErrorCode::kEmpty, "no decisions given");
  return s;
}

DecisionInput decision_input_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "decision submission must be an object");
  DecisionInput in;
  auto list = [&](const char* key, std::vector<std::string>& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array()) throw Error(ErrorCode::kSchema, std::string("'") + key + "' must be an array of strings");
    for (const auto& v : *it) {
      if (!v.is_string()) throw Error(ErrorCode::kSchema, std::string("'") + key + "' must be an array of strings");
      out.push_back(v.get<std::string>());
    }
  };
  list("consent", in.consent);
  list("refuse", in.refuse);
  list("withdraw", in.withdraw);
  list("object", in.object);
  list("generals", in.generals);
  return in;
}

nlohmann::ordered_json origin_summary_json(const OriginRecord& record) {
  const auto full = to_json(record);
  nlohmann::ordered_json j;
  j["origin"] = full["origin"];
  j["support"] = full["support"];
  j["decisions"] = full["decisions"];
  j["lastVersion"] = full["lastVersion"];
  return j;
}

namespace {

// Carries stored statuses into a new resource version. Refused ids come back
// as pending only when their request text changed.
DecisionMap reconcile(const DecisionMap& prior, const std::optional<ConsentRequestsList>& old_list,
                      const ConsentRequestsList& list) {
  DecisionMap out;
  out.do_not_track = prior.do_not_track;
  out.do_not_sell = prior.do_not_sell;
  auto carry = [&](const ConsentRequest& r, Basis basis) {
    RequestStatus s = initial_status(basis);
    if (auto old = prior.status(r.id); old && status_valid_for(*old, basis)) {
      s = *old;
      if (s == RequestStatus::kRefused && old_list) {
        const ConsentRequest* before = old_list->find(r.id);
        if (before && before->text != r.text) s = RequestStatus::kPending;
      }
    }
    out.statuses[r.id] = s;
  };
  for (const auto& r : list.consent_requests()) carry(r, Basis::kConsent);
  for (const auto& r : list.legitimate_interests()) carry(r, Basis::kLegitimateInterest);
  return out;
}

std::optional<PendingPrompt> build_prompt(const OriginRecord& r) {
  PendingPrompt p;
  p.origin = r.origin;
  p.version = r.requests->version();
  for (const RequestId& id : undecided_ids(*r.requests, r.decisions)) p.items.push_back(*r.requests->find(id));
  if (p.items.empty()) return std::nullopt;
  return p;
}

std::string digest_of_field(const std::string& field) { return canonical_digest(parse_subject_field(field)); }

}  // namespace

Agent::Agent(DecisionStore& store, http::Client& client, AgentConfig config)
    : store_(&store), client_(&client), config_(config) {}

void Agent::resolve_ack(OriginRecord& record, const std::optional<std::string>& ack) {
  if (record.awaiting_ack) {
    const std::string expected = *record.awaiting_ack;
    record.awaiting_ack.reset();
    if (ack && *ack == expected) {
      store_->record_event(record.origin, EventDirection::kReceived, expected);
    } else {
      if (ack) spdlog::warn("{}: ack {} does not match sent digest {}", record.origin.to_string(), *ack, expected);
      store_->record_event(record.origin, EventDirection::kReceived, "missing-ack " + expected);
    }
  } else if (ack) {
    spdlog::warn("{}: ack {} without a sent signal", record.origin.to_string(), *ack);
  }
}

SupportStatus Agent::observe_response(const Origin& origin, const http::Headers& headers,
                                      const std::vector<http::LinkTarget>& links) {
  std::lock_guard lock(mutex_);
  OriginRecord& rec = store_->record(origin);
  const Instant now = store_->clock().now();

  SupportStatus status;
  status.state = SupportState::kUnsupported;
  status.expiry = now + config_.support_ttl;
  std::optional<std::string> ack;

  if (const auto raw = http::header_value(headers, http::kAdpcField)) {
    try {
      const MetaAnnouncement meta = parse_controller_field(*raw);
      ack = meta.ack;
      if (meta.linked_meta) {
        const auto link = std::find_if(links.begin(), links.end(),
                                       [](const http::LinkTarget& l) { return l.rel == "consent-requests"; });
        if (link == links.end()) throw Error(ErrorCode::kMetaMalformed, "linked-meta without a consent-requests link");
        const std::string url = resolve_url(origin, link->url);
        if (url.empty() || Origin::parse(url) != origin) {
          throw Error(ErrorCode::kMetaMalformed, "consent-requests link is not a same-origin URL: " + link->url);
        }
        status.state = SupportState::kSupported;
        status.requests_url = url;
      } else if (rec.support.supported_at(now)) {
        status = rec.support;  // ack-only response; announcement still cached
      } else {
        throw Error(ErrorCode::kMetaMalformed, "ADPC field without linked-meta");
      }
    } catch (const Error& e) {
      spdlog::warn("{}: unusable ADPC announcement ({}): treated as unsupported", origin.to_string(), e.what());
      status = SupportStatus{SupportState::kUnsupported, std::nullopt, now + config_.support_ttl};
    }
  }

  resolve_ack(rec, ack);
  rec.support = status;
  store_->commit();
  return status;
}

std::optional<PendingPrompt> Agent::run_policy(OriginRecord& r) {
  const Instant now = store_->clock().now();
  const PolicyOutcome outcome = apply_policy(r.origin, *r.requests, r, store_->policies(), now);

  if (const auto* autos = std::get_if<AutoSignal>(&outcome)) {
    const DecisionMap map = evaluate(*r.requests, autos->signal, r.decisions);
    const std::string canonical = serialize_signal_set(autos->signal);
    store_->record_event(r.origin, EventDirection::kUserDecided, canonical);
    r.decisions = map;
    r.queued.push_back(canonical);
  } else if (const auto* none = std::get_if<NoAction>(&outcome); none && none->below_threshold) {
    r.prompt_deferred = true;
    r.prompt.reset();
    return std::nullopt;
  }
  r.prompt_deferred = false;
  r.prompt = build_prompt(r);
  return r.prompt;
}

std::optional<PendingPrompt> Agent::sync_requests(const Origin& origin) {
  std::lock_guard lock(mutex_);
  const Instant now = store_->clock().now();
  const OriginRecord* existing = store_->find(origin);
  if (!existing || !existing->support.supported_at(now) || !existing->support.requests_url) {
    throw Error(ErrorCode::kNotSupported, origin.to_string() + " has no valid ADPC support entry");
  }

  http::Request req;
  req.url = *existing->support.requests_url;
  if (existing->etag && existing->requests) http::set_header(req.headers, "If-None-Match", *existing->etag);
  const http::Response resp = client_->send(req);

  std::optional<ConsentRequestsList> fetched;
  if (resp.status == 304) {
    if (!existing->requests) throw Error(ErrorCode::kFetch, "304 for an uncached requests resource");
  } else if (resp.status != 200) {
    throw Error(ErrorCode::kFetch, "GET " + req.url + " returned " + std::to_string(resp.status));
  } else {
    fetched = parse_requests_resource(resp.body);
  }

  OriginRecord& r = store_->record(origin);
  std::optional<PendingPrompt> prompt;
  if (fetched && r.last_resource_version != fetched->version()) {
    store_->record_event(origin, EventDirection::kResourceSeen, fetched->version());
    r.decisions = reconcile(r.decisions, r.requests, *fetched);
    r.last_resource_version = fetched->version();
    r.requests = std::move(*fetched);
    r.etag = http::header_value(resp.headers, "ETag");
    r.prompt.reset();
    prompt = run_policy(r);
  } else {
    if (fetched) r.etag = http::header_value(resp.headers, "ETag");
    if (r.prompt_deferred) prompt = run_policy(r);
  }
  store_->commit();
  return prompt;
}

std::optional<std::string> Agent::prepare_request_fields(const Origin& origin) const {
  std::lock_guard lock(mutex_);
  const OriginRecord* rec = store_->find(origin);
  if (!rec || !rec->support.supported_at(store_->clock().now())) return std::nullopt;

  SignalSet s;
  for (const auto& [id, status] : rec->decisions.statuses) {
    switch (status) {
      case RequestStatus::kConsented: s.add(DirectiveKind::kConsent, id); break;
      case RequestStatus::kRefused: s.add(DirectiveKind::kRefuse, id); break;
      case RequestStatus::kWithdrawn: s.add(DirectiveKind::kWithdraw, id); break;
      case RequestStatus::kObjected: s.add(DirectiveKind::kObject, id); break;
      case RequestStatus::kPending:
      case RequestStatus::kNotObjected: break;
    }
  }
  if (rec->decisions.do_not_track) s.add(GeneralSignal::kDoNotTrack);
  if (rec->decisions.do_not_sell) s.add(GeneralSignal::kDoNotSell);
  if (s.empty()) return std::nullopt;
  return serialize_signal_set(s);
}

SignalSet Agent::decide(const Origin& origin, const SignalSet& decisions) {
  std::lock_guard lock(mutex_);
  const OriginRecord* existing = store_->find(origin);
  if (!existing || !existing->requests) {
    throw Error(ErrorCode::kNotSupported, origin.to_string() + " has no tracked consent requests");
  }
  const DecisionMap map = evaluate(*existing->requests, decisions, existing->decisions);
  const std::string canonical = serialize_signal_set(decisions);
  store_->record_event(origin, EventDirection::kUserDecided, canonical);

  OriginRecord& r = store_->record(origin);
  r.decisions = map;
  r.queued.push_back(canonical);
  if (r.prompt) {
    // A prompt lives while a consent request still waits for an answer.
    auto p = build_prompt(r);
    const bool consent_left = p && std::any_of(p->items.begin(), p->items.end(), [&](const ConsentRequest& item) {
                                return r.decisions.status(item.id) == RequestStatus::kPending;
                              });
    r.prompt = consent_left ? p : std::nullopt;
  }
  store_->commit();
  return decisions;
}

http::Response Agent::visit(const std::string& url) {
  std::lock_guard lock(mutex_);
  const Origin origin = Origin::parse(url);
  const Instant now = store_->clock().now();

  OriginRecord& rec = store_->record(origin);
  note_visit(rec, now, store_->policies());

  http::Request req;
  req.url = url;
  if (const auto field = prepare_request_fields(origin)) {
    http::set_header(req.headers, http::kAdpcField, *field);
    store_->record_event(origin, EventDirection::kSent, *field);
    rec.awaiting_ack = digest_of_field(*field);
    rec.queued.clear();
  }
  store_->commit();

  http::Response resp;
  try {
    resp = client_->send(req);
  } catch (const Error&) {
    resolve_ack(rec, std::nullopt);
    store_->commit();
    throw;
  }

  observe_response(origin, resp.headers, http::link_targets(resp.headers));
  if (rec.support.supported_at(now)) {
    try {
      sync_requests(origin);
    } catch (const Error& e) {
      spdlog::warn("{}: requests sync failed, keeping stored state: {}", origin.to_string(), e.what());
    }
  }
  return resp;
}

std::vector<PendingPrompt> Agent::pending_prompts() const {
  std::lock_guard lock(mutex_);
  std::vector<PendingPrompt> out;
  for (const Origin& o : store_->origins()) {
    const OriginRecord* r = store_->find(o);
    if (r && r->prompt) out.push_back(*r->prompt);
  }
  return out;
}

std::vector<std::string> Agent::queued(const Origin& origin) const {
  std::lock_guard lock(mutex_);
  const OriginRecord* r = store_->find(origin);
  return r ? r->queued : std::vector<std::string>{};
}

}  // namespace adpc::agent
