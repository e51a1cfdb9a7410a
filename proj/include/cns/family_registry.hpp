#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cns/errors.hpp"
#include "cns/event.hpp"
#include "cns/serde_registry.hpp"

namespace cns {

enum class FieldType { String, Integer, Number, Boolean };

inline const char* to_string(FieldType type) {
    switch (type) {
    case FieldType::String: return "string";
    case FieldType::Integer: return "integer";
    case FieldType::Number: return "number";
    case FieldType::Boolean: return "boolean";
    }
    return "?";
}

inline FieldType field_type_from_string(const std::string& s) {
    if (s == "string") return FieldType::String;
    if (s == "integer") return FieldType::Integer;
    if (s == "number") return FieldType::Number;
    if (s == "boolean") return FieldType::Boolean;
    throw Error("unknown field type \"" + s + "\"");
}

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::String;
    bool required = true;
};

/// Project-level event family: a base key plus payload expectations, codec
/// choice and validator rules. Full keys are built by binding runtime
/// qualifiers to the family.
struct EventFamily {
    std::string base_key;
    std::string codec = codecs::kNative;
    std::vector<FieldSpec> fields;

    /// Combine the family's base components with runtime qualifiers.
    EventTypeKey bind(std::vector<std::string> qualifiers = {}) const {
        EventTypeKey base = EventTypeKey::parse(base_key);
        return EventTypeKey::make(base.space(), base.super_family(), base.family(), base.name(),
                                  std::move(qualifiers));
    }

    /// Required-field and type-of-field checks over the payload map.
    Validator make_validator() const {
        std::vector<FieldSpec> rules = fields;
        return [rules](const PayloadValue& payload) -> ValidationResult {
            if (!payload.is_object()) {
                return ValidationResult::fail("payload is not a field map");
            }
            for (const FieldSpec& field : rules) {
                auto it = payload.find(field.name);
                if (it == payload.end()) {
                    if (field.required) {
                        return ValidationResult::fail("missing field: " + field.name);
                    }
                    continue;
                }
                bool type_ok = false;
                switch (field.type) {
                case FieldType::String: type_ok = it->is_string(); break;
                case FieldType::Integer: type_ok = it->is_number_integer(); break;
                case FieldType::Number: type_ok = it->is_number(); break;
                case FieldType::Boolean: type_ok = it->is_boolean(); break;
                }
                if (!type_ok) {
                    return ValidationResult::fail("field " + field.name + " is not of type " +
                                                  std::string(to_string(field.type)));
                }
            }
            return ValidationResult::pass();
        };
    }

    EventTypeSerDe make_serde(bool with_validator = true) const {
        return make_codec_serde(base_key, codec, with_validator ? make_validator() : Validator{});
    }
};

/// Register each family and freeze the registry; the default-codec fallback
/// for unregistered families is preserved.
inline void install_families(SerDeRegistry& registry, const std::vector<EventFamily>& families,
                             bool with_validators = true) {
    for (const EventFamily& family : families) {
        registry.register_serde(family.make_serde(with_validators));
    }
    registry.freeze();
}

/// The worked example families: status updates, heartbeats (health events),
/// state snapshots and control acknowledgements. Payload shapes are
/// fixtures, not contracts.
namespace families {

inline EventFamily status_update() {
    return EventFamily{"fabric.node.status.update",
                       codecs::kNative,
                       {{"status", FieldType::String, true},
                        {"sequence", FieldType::Integer, true},
                        {"timestamp", FieldType::Integer, false}}};
}

inline EventFamily heartbeat() {
    return EventFamily{"fabric.node.health.heartbeat",
                       codecs::kJson,
                       {{"node", FieldType::String, true},
                        {"uptime_s", FieldType::Number, false}}};
}

inline EventFamily snapshot() {
    return EventFamily{"fabric.node.state.snapshot",
                       codecs::kNative,
                       {{"data", FieldType::String, true},
                        {"sequence", FieldType::Integer, false}}};
}

inline EventFamily control_ack() {
    return EventFamily{"fabric.node.control.ack",
                       codecs::kJson,
                       {{"command", FieldType::String, true},
                        {"accepted", FieldType::Boolean, true},
                        {"code", FieldType::Integer, false}}};
}

inline std::vector<EventFamily> examples() {
    return {status_update(), heartbeat(), snapshot(), control_ack()};
}

} // namespace families

/// Declarative family config:
///   [{"base_key": "...", "codec": "native"|"json",
///     "fields": [{"name": "...", "type": "string", "required": true}, ...]}]
inline std::vector<EventFamily> families_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) {
        throw Error("family config must be a JSON array");
    }
    std::vector<EventFamily> out;
    for (const auto& entry : doc) {
        EventFamily family;
        family.base_key = entry.at("base_key").get<std::string>();
        family.codec = entry.value("codec", std::string(codecs::kNative));
        if (!codecs::known(family.codec)) {
            throw Error("family \"" + family.base_key + "\" names unknown codec \"" +
                        family.codec + "\"");
        }
        if (entry.contains("fields")) {
            for (const auto& f : entry.at("fields")) {
                FieldSpec spec;
                spec.name = f.at("name").get<std::string>();
                spec.type = field_type_from_string(f.value("type", std::string("string")));
                spec.required = f.value("required", true);
                family.fields.push_back(std::move(spec));
            }
        }
        out.push_back(std::move(family));
    }
    return out;
}

inline std::vector<EventFamily> load_families(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open family config \"" + path + "\"");
    }
    nlohmann::json doc = nlohmann::json::parse(in);
    return families_from_json(doc);
}

} // namespace cns
