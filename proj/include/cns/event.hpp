#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "cns/event_key.hpp"

namespace cns {

/// Payload values are dynamic field maps (or any JSON-representable value).
/// Pre-serialization events carry the value form; the serialized byte form
/// only exists inside the transport envelope.
using PayloadValue = nlohmann::json;

/// String-to-string metadata. Keys are unique by construction of the map.
using Metadata = std::map<std::string, std::string>;

struct Event {
    EventTypeKey key;
    PayloadValue payload;
    Metadata metadata;
};

inline Event make_event(EventTypeKey key, PayloadValue payload = {}, Metadata metadata = {}) {
    return Event{std::move(key), std::move(payload), std::move(metadata)};
}

} // namespace cns
