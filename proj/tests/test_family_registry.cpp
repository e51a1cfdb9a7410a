#include "cns/family_registry.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using cns::EventFamily;
using cns::SerDeRegistry;
using nlohmann::json;

namespace {

// Canonical and documented-invalid payloads per example family.
struct FamilyFixture {
    EventFamily family;
    json valid;
    json invalid;
};

std::vector<FamilyFixture> fixtures() {
    return {
        {cns::families::status_update(),
         {{"status", "ok"}, {"sequence", 7}, {"timestamp", 1723190400}},
         {{"sequence", 7}}}, // missing status
        {cns::families::heartbeat(),
         {{"node", "node17"}, {"uptime_s", 12.5}},
         {{"node", 17}}}, // node not a string
        {cns::families::snapshot(),
         {{"data", "0123abcd"}, {"sequence", 1}},
         json::object()}, // missing data
        {cns::families::control_ack(),
         {{"command", "calibrate"}, {"accepted", true}, {"code", 0}},
         {{"command", "calibrate"}}}, // missing accepted
    };
}

} // namespace

TEST(FamilyRegistry, BindCombinesBaseComponentsWithQualifiers) {
    auto key = cns::families::status_update().bind({"node17", "10s"});
    EXPECT_EQ(key.full_key(), "fabric.node.status.update.node17.10s");
}

TEST(FamilyRegistry, BindWithNoQualifiersYieldsBareBaseKey) {
    auto family = cns::families::heartbeat();
    auto key = family.bind();
    EXPECT_EQ(key.full_key(), family.base_key);
}

TEST(FamilyRegistry, BindRejectsInvalidQualifier) {
    EXPECT_THROW(cns::families::status_update().bind({"bad.token"}), cns::InvalidTokenError);
}

TEST(FamilyRegistry, InstallRegistersEveryFamilyAndFreezes) {
    SerDeRegistry registry;
    cns::install_families(registry, cns::families::examples());
    EXPECT_TRUE(registry.frozen());
    for (const auto& family : cns::families::examples()) {
        EXPECT_TRUE(registry.has(family.base_key)) << family.base_key;
    }
}

TEST(FamilyRegistry, InstallWithDuplicateBaseKeyFails) {
    SerDeRegistry registry;
    std::vector<EventFamily> families = {cns::families::snapshot(), cns::families::snapshot()};
    EXPECT_THROW(cns::install_families(registry, families), cns::DuplicateRegistrationError);
}

TEST(FamilyRegistry, UnregisteredFamilyStillResolvesToDefaultCodec) {
    SerDeRegistry registry;
    cns::install_families(registry, cns::families::examples());
    auto serde = registry.resolve(cns::EventTypeKey::parse("other.node.misc.blip"));
    EXPECT_EQ(serde.codec, registry.default_codec());
    EXPECT_FALSE(static_cast<bool>(serde.validator));
}

TEST(FamilyRegistry, CanonicalPayloadsRoundTripBothCodecsAndValidate) {
    for (const auto& fixture : fixtures()) {
        auto validator = fixture.family.make_validator();
        EXPECT_TRUE(validator(fixture.valid).ok) << fixture.family.base_key;
        auto invalid_result = validator(fixture.invalid);
        EXPECT_FALSE(invalid_result.ok) << fixture.family.base_key;
        EXPECT_FALSE(invalid_result.reason.empty());
        for (const char* codec : {"native", "json"}) {
            EventFamily variant = fixture.family;
            variant.codec = codec;
            auto serde = variant.make_serde();
            EXPECT_EQ(serde.deserializer(serde.serializer(fixture.valid)), fixture.valid)
                << fixture.family.base_key << " codec=" << codec;
        }
    }
}

TEST(FamilyRegistry, MissingRequiredFieldReportsFieldName) {
    auto validator = cns::families::status_update().make_validator();
    auto result = validator(json{{"sequence", 1}});
    ASSERT_FALSE(result.ok);
    EXPECT_EQ(result.reason, "missing field: status");
}

TEST(FamilyRegistry, OptionalFieldsMayBeAbsentButMustTypeCheck) {
    auto validator = cns::families::snapshot().make_validator();
    EXPECT_TRUE(validator(json{{"data", "x"}}).ok);
    EXPECT_FALSE(validator(json{{"data", "x"}, {"sequence", "not-an-int"}}).ok);
}

TEST(FamilyRegistry, LoadsDeclarativeConfig) {
    json doc = json::array({
        {{"base_key", "plant.line.widget.count"},
         {"codec", "json"},
         {"fields", json::array({
             {{"name", "count"}, {"type", "integer"}, {"required", true}},
             {{"name", "line"}, {"type", "string"}, {"required", false}},
         })}},
        {{"base_key", "plant.line.widget.rate"}},
    });
    auto families = cns::families_from_json(doc);
    ASSERT_EQ(families.size(), 2u);
    EXPECT_EQ(families[0].codec, "json");
    EXPECT_EQ(families[1].codec, "native");
    auto validator = families[0].make_validator();
    EXPECT_TRUE(validator(json{{"count", 3}}).ok);
    EXPECT_FALSE(validator(json{{"count", "three"}}).ok);

    std::string path = ::testing::TempDir() + "cns_families_test.json";
    {
        std::ofstream out(path);
        out << doc.dump(2);
    }
    auto from_file = cns::load_families(path);
    EXPECT_EQ(from_file.size(), 2u);
    std::remove(path.c_str());
}

TEST(FamilyRegistry, ConfigRejectsUnknownCodecAndType) {
    EXPECT_THROW(cns::families_from_json(json::array(
                     {{{"base_key", "a.b.c.d"}, {"codec", "xml"}}})),
                 cns::Error);
    EXPECT_THROW(cns::families_from_json(json::array(
                     {{{"base_key", "a.b.c.d"},
                       {"fields", json::array({{{"name", "x"}, {"type", "blob"}}})}}})),
                 cns::Error);
}
