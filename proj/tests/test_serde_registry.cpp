#include "cns/serde_registry.hpp"

#include <gtest/gtest.h>

#include "cns/event_key.hpp"

using cns::EventTypeKey;
using cns::EventTypeSerDe;
using cns::SerDeRegistry;
using cns::ValidationResult;
using nlohmann::json;

namespace {

cns::Validator require_status() {
    return [](const json& payload) {
        if (!payload.is_object() || !payload.contains("status")) {
            return ValidationResult::fail("missing field: status");
        }
        return ValidationResult::pass();
    };
}

} // namespace

TEST(SerDeRegistry, RegisterThenResolveReturnsSameSerde) {
    SerDeRegistry registry;
    registry.register_serde(cns::make_codec_serde("fabric.node.status.update", "json"));
    auto serde = registry.resolve(EventTypeKey::parse("fabric.node.status.update"));
    EXPECT_EQ(serde.codec, "json");
    EXPECT_EQ(serde.base_key, "fabric.node.status.update");
}

TEST(SerDeRegistry, DuplicateRegistrationIsAnError) {
    SerDeRegistry registry;
    registry.register_serde(cns::make_codec_serde("fabric.node.status.update", "json"));
    EXPECT_THROW(registry.register_serde(cns::make_codec_serde("fabric.node.status.update", "native")),
                 cns::DuplicateRegistrationError);
}

TEST(SerDeRegistry, UnregisteredFamilyFallsBackToDefaultCodec) {
    SerDeRegistry registry;
    auto serde = registry.resolve(EventTypeKey::parse("x.y.z.w"));
    EXPECT_EQ(serde.codec, cns::codecs::kNative);
    EXPECT_FALSE(static_cast<bool>(serde.validator));
    json payload = {{"k", 1}};
    EXPECT_EQ(serde.deserializer(serde.serializer(payload)), payload);
}

TEST(SerDeRegistry, ResolutionIgnoresQualifiers) {
    SerDeRegistry registry;
    registry.register_serde(cns::make_codec_serde("fabric.node.status.update", "json"));
    auto a = registry.resolve(EventTypeKey::parse("fabric.node.status.update.node17.10s"));
    auto b = registry.resolve(EventTypeKey::parse("fabric.node.status.update.node3"));
    EXPECT_EQ(a.codec, b.codec);
    EXPECT_EQ(a.base_key, b.base_key);
}

TEST(SerDeRegistry, RegisterRejectsNonBaseKeys) {
    SerDeRegistry registry;
    EXPECT_THROW(registry.register_serde(cns::make_codec_serde("a.b.c", "json")),
                 cns::MalformedKeyError);
    EXPECT_THROW(registry.register_serde(cns::make_codec_serde("a.b.c.d.q", "json")),
                 cns::MalformedKeyError);
}

TEST(SerDeRegistry, FreezeRejectsLateRegistration) {
    SerDeRegistry registry;
    registry.register_serde(cns::make_codec_serde("a.b.c.d", "json"));
    registry.freeze();
    EXPECT_THROW(registry.register_serde(cns::make_codec_serde("e.f.g.h", "json")),
                 cns::RegistryFrozenError);
    EXPECT_TRUE(registry.has("a.b.c.d"));
}

TEST(SerDeRegistry, ValidatePassesWithAcceptingValidator) {
    auto serde = cns::make_codec_serde("a.b.c.d", "json", require_status());
    EXPECT_TRUE(SerDeRegistry::validate(serde, json{{"status", "ok"}}).ok);
}

TEST(SerDeRegistry, ValidateFailsWithReason) {
    auto serde = cns::make_codec_serde("a.b.c.d", "json", require_status());
    auto result = SerDeRegistry::validate(serde, json::object());
    EXPECT_FALSE(result.ok);
    EXPECT_EQ(result.reason, "missing field: status");
}

TEST(SerDeRegistry, AbsentValidatorAlwaysPasses) {
    auto serde = cns::make_codec_serde("a.b.c.d", "json");
    EXPECT_TRUE(SerDeRegistry::validate(serde, json::object()).ok);
    EXPECT_TRUE(SerDeRegistry::validate(serde, json(42)).ok);
}

TEST(SerDeCodecs, RoundTripBothCodecs) {
    const json payloads[] = {
        {{"status", "ok"}, {"sequence", 7}, {"timestamp", 1723190400}},
        {{"data", "xyzzy"}, {"sequence", 0}},
        json::object(),
        {{"nested", {{"a", 1}, {"b", {1, 2, 3}}}}, {"f", 1.5}, {"neg", -12}},
    };
    for (const char* codec : {"native", "json"}) {
        auto serde = cns::make_codec_serde("a.b.c.d", codec);
        for (const auto& p : payloads) {
            EXPECT_EQ(serde.deserializer(serde.serializer(p)), p) << codec;
        }
    }
}

TEST(SerDeCodecs, DecodersThrowOnGarbage) {
    EXPECT_THROW(cns::codecs::json_decode("{not json"), std::exception);
    EXPECT_THROW(cns::codecs::native_decode("\x01\x02garbage"), std::exception);
}
