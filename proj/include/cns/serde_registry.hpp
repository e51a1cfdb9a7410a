#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include <json.hpp>

#include "cns/errors.hpp"
#include "cns/event.hpp"

namespace cns {

struct ValidationResult {
    bool ok = true;
    std::string reason;

    static ValidationResult pass() { return {true, {}}; }
    static ValidationResult fail(std::string reason) { return {false, std::move(reason)}; }
    explicit operator bool() const { return ok; }
};

using Serializer = std::function<std::string(const PayloadValue&)>;
using Deserializer = std::function<PayloadValue(const std::string&)>;
using Validator = std::function<ValidationResult(const PayloadValue&)>;

/// Per-family serialization bundle, resolved by base_key. The validator is
/// optional; an empty function means every payload passes.
struct EventTypeSerDe {
    std::string base_key;
    std::string codec; // "native", "json", or "custom"
    Serializer serializer;
    Deserializer deserializer;
    Validator validator;
};

namespace codecs {

inline constexpr const char* kNative = "native";
inline constexpr const char* kJson = "json";

/// Compact binary encoding (CBOR). The default codec.
inline std::string native_encode(const PayloadValue& payload) {
    std::vector<std::uint8_t> bytes = nlohmann::json::to_cbor(payload);
    return std::string(bytes.begin(), bytes.end());
}

inline PayloadValue native_decode(const std::string& bytes) {
    return nlohmann::json::from_cbor(bytes); // throws on malformed input
}

/// Portable text encoding.
inline std::string json_encode(const PayloadValue& payload) {
    return payload.dump();
}

inline PayloadValue json_decode(const std::string& bytes) {
    return nlohmann::json::parse(bytes); // throws on malformed input
}

inline bool known(const std::string& codec) {
    return codec == kNative || codec == kJson;
}

inline Serializer serializer_for(const std::string& codec) {
    return codec == kJson ? Serializer(&json_encode) : Serializer(&native_encode);
}

inline Deserializer deserializer_for(const std::string& codec) {
    return codec == kJson ? Deserializer(&json_decode) : Deserializer(&native_decode);
}

} // namespace codecs

inline EventTypeSerDe make_codec_serde(std::string base_key, const std::string& codec,
                                       Validator validator = nullptr) {
    if (!codecs::known(codec)) {
        throw Error("unknown codec identifier: \"" + codec + "\"");
    }
    return EventTypeSerDe{std::move(base_key), codec, codecs::serializer_for(codec),
                          codecs::deserializer_for(codec), std::move(validator)};
}

/// Registry mapping base keys to serde bundles. Registration happens during
/// setup; freeze() marks the end of setup, after which the registry is
/// read-only and safe to share across threads.
class SerDeRegistry {
public:
    explicit SerDeRegistry(std::string default_codec = codecs::kNative)
        : default_codec_(std::move(default_codec)) {
        if (!codecs::known(default_codec_)) {
            throw Error("unknown default codec: \"" + default_codec_ + "\"");
        }
    }

    void register_serde(EventTypeSerDe serde) {
        if (EventTypeKey::parse(serde.base_key).qualifiers().size() != 0) {
            throw MalformedKeyError("base_key must have exactly 4 tokens: \"" + serde.base_key + "\"");
        }
        std::unique_lock lock(mutex_);
        if (frozen_) {
            throw RegistryFrozenError("registry is frozen; cannot register \"" + serde.base_key + "\"");
        }
        auto [it, inserted] = entries_.emplace(serde.base_key, std::move(serde));
        if (!inserted) {
            throw DuplicateRegistrationError("serde already registered for base_key \"" +
                                             it->first + "\"");
        }
    }

    void freeze() {
        std::unique_lock lock(mutex_);
        frozen_ = true;
    }

    bool frozen() const {
        std::shared_lock lock(mutex_);
        return frozen_;
    }

    bool has(const std::string& base_key) const {
        std::shared_lock lock(mutex_);
        return entries_.count(base_key) != 0;
    }

    /// Registered serde for the key's base_key, else a default-codec serde
    /// with no validator. Resolution ignores qualifiers by construction.
    EventTypeSerDe resolve(const EventTypeKey& key) const {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(key.base_key());
        if (it != entries_.end()) {
            return it->second;
        }
        return EventTypeSerDe{key.base_key(), default_codec_,
                              codecs::serializer_for(default_codec_),
                              codecs::deserializer_for(default_codec_), nullptr};
    }

    const std::string& default_codec() const { return default_codec_; }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return entries_.size();
    }

    /// Absent validator means pass; failure is a value, never a throw.
    static ValidationResult validate(const EventTypeSerDe& serde, const PayloadValue& payload) {
        if (!serde.validator) {
            return ValidationResult::pass();
        }
        return serde.validator(payload);
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, EventTypeSerDe> entries_;
    std::string default_codec_;
    bool frozen_ = false;
};

} // namespace cns
