#include "cns/event_key.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/generators.hpp"

using cns::EventTypeKey;

TEST(EventKey, AssemblesFullKeyWithQualifiers) {
    auto key = EventTypeKey::make("fabric", "node", "status", "update", {"node17", "10s"});
    EXPECT_EQ(key.full_key(), "fabric.node.status.update.node17.10s");
    EXPECT_EQ(key.base_key(), "fabric.node.status.update");
    EXPECT_EQ(key.group_key(), "fabric.node.status");
    EXPECT_EQ(key.qualifiers_key(), "node17.10s");
}

TEST(EventKey, EmptyQualifiers) {
    auto key = EventTypeKey::make("a", "b", "c", "d");
    EXPECT_EQ(key.full_key(), "a.b.c.d");
    EXPECT_EQ(key.qualifiers_key(), "");
    EXPECT_EQ(key.base_key(), "a.b.c.d");
}

TEST(EventKey, DerivedFormsWithSingleQualifier) {
    auto key = EventTypeKey::make("a", "b", "c", "d", {"x"});
    EXPECT_EQ(key.base_key(), "a.b.c.d");
    EXPECT_EQ(key.group_key(), "a.b.c");
    EXPECT_EQ(key.full_key(), "a.b.c.d.x");
}

TEST(EventKey, RejectsInvalidTokens) {
    EXPECT_THROW(EventTypeKey::make("", "b", "c", "d"), cns::InvalidTokenError);
    EXPECT_THROW(EventTypeKey::make("a.b", "b", "c", "d"), cns::InvalidTokenError);
    EXPECT_THROW(EventTypeKey::make("a", "*", "c", "d"), cns::InvalidTokenError);
    EXPECT_THROW(EventTypeKey::make("a", "b", ">", "d"), cns::InvalidTokenError);
    EXPECT_THROW(EventTypeKey::make("a", "b", "c", "d", {"ok", ""}), cns::InvalidTokenError);
    EXPECT_THROW(EventTypeKey::make("a", "b", "c", "d", {"has space"}), cns::InvalidTokenError);
}

TEST(EventKey, ParsesQualifiedKey) {
    auto key = EventTypeKey::parse("fabric.node.status.update.node17.10s");
    EXPECT_EQ(key.space(), "fabric");
    EXPECT_EQ(key.super_family(), "node");
    EXPECT_EQ(key.family(), "status");
    EXPECT_EQ(key.name(), "update");
    ASSERT_EQ(key.qualifiers().size(), 2u);
    EXPECT_EQ(key.qualifiers()[0], "node17");
    EXPECT_EQ(key.qualifiers()[1], "10s");
}

TEST(EventKey, ParsesMinimalKey) {
    auto key = EventTypeKey::parse("a.b.c.d");
    EXPECT_TRUE(key.qualifiers().empty());
}

TEST(EventKey, ParseRejectsMalformedKeys) {
    EXPECT_THROW(EventTypeKey::parse("a.b.c"), cns::MalformedKeyError);
    EXPECT_THROW(EventTypeKey::parse("a..c.d"), cns::MalformedKeyError);
    EXPECT_THROW(EventTypeKey::parse("a.b.c.*"), cns::MalformedKeyError);
    EXPECT_THROW(EventTypeKey::parse("a.b.c.>"), cns::MalformedKeyError);
    EXPECT_THROW(EventTypeKey::parse(""), cns::MalformedKeyError);
    EXPECT_THROW(EventTypeKey::parse("a.b.c.d."), cns::MalformedKeyError);
}

TEST(EventKey, EqualityIsFieldwise) {
    auto a = EventTypeKey::make("a", "b", "c", "d", {"x"});
    auto b = EventTypeKey::parse("a.b.c.d.x");
    auto c = EventTypeKey::make("a", "b", "c", "d", {"y"});
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(EventKey, RoundTripProperty) {
    std::mt19937 rng(20240811);
    for (int i = 0; i < 2000; ++i) {
        auto key = cns_test::random_key(rng);
        auto reparsed = cns::EventTypeKey::parse(key.full_key());
        ASSERT_EQ(key, reparsed) << key.full_key();
        // Derived-form prefix chain.
        ASSERT_EQ(key.full_key().rfind(key.base_key(), 0), 0u);
        ASSERT_EQ(key.base_key().rfind(key.group_key(), 0), 0u);
        if (key.qualifiers().empty()) {
            ASSERT_EQ(key.full_key(), key.base_key());
        } else {
            ASSERT_EQ(key.full_key(), key.base_key() + "." + key.qualifiers_key());
        }
    }
}
