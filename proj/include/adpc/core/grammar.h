#pragma once

#include "adpc/core/signal.h"

#include <string>
#include <string_view>
#include <variant>

namespace adpc {

enum class Direction { kSubjectToController, kControllerToSubject };

using ParsedField = std::variant<SignalSet, MetaAnnouncement>;

// Parses one ADPC field value (field name excluded). Grammar:
//
//   adpc-field = directive *( OWS "," OWS directive )
//   directive  = general / specific / meta
//   specific   = kind "=" id-set
//   id-set     = id / DQUOTE id *( SP id ) DQUOTE
//   meta       = "linked-meta" / ( "ack=" 16HEXDIG )
//
// Subject-to-controller fields yield a SignalSet; controller-to-subject fields
// yield a MetaAnnouncement. Throws Error with kSyntax, kConflict, kDirection
// or kEmpty.
ParsedField parse_signal_field(std::string_view raw, Direction direction);

SignalSet parse_subject_field(std::string_view raw);
MetaAnnouncement parse_controller_field(std::string_view raw);

// Canonical form: generals in enum order, then consent, refuse, withdraw,
// object; ids sorted bytewise, quoted iff more than one; joined by ", ".
// Throws Error(kEmpty) for an empty set.
std::string serialize_signal_set(const SignalSet& s);

std::string serialize_meta(const MetaAnnouncement& m);

}  // namespace adpc
