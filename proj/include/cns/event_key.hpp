#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "cns/errors.hpp"

namespace cns {

namespace detail {

inline bool valid_token(std::string_view token) {
    if (token.empty()) {
        return false;
    }
    for (unsigned char c : token) {
        if (c == '.' || c == '*' || c == '>') {
            return false;
        }
        // Whitespace or control characters inside a subject token would break
        // the space-delimited transport control lines.
        if (std::isspace(c) || std::iscntrl(c)) {
            return false;
        }
    }
    return true;
}

inline std::vector<std::string> split_subject(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = s.find('.', start);
        if (dot == std::string_view::npos) {
            tokens.emplace_back(s.substr(start));
            return tokens;
        }
        tokens.emplace_back(s.substr(start, dot - start));
        start = dot + 1;
    }
}

} // namespace detail

/// Structured routing identity of an event.
///
/// The full key is the dot-joined form space.super_family.family.name with
/// any qualifiers appended. Keys are immutable and cheap to copy; the full
/// and base forms are precomputed because they serve as registry and
/// subscription map keys.
class EventTypeKey {
public:
    static EventTypeKey make(std::string space,
                             std::string super_family,
                             std::string family,
                             std::string name,
                             std::vector<std::string> qualifiers = {}) {
        check_token(space, "space");
        check_token(super_family, "super_family");
        check_token(family, "family");
        check_token(name, "name");
        for (const auto& q : qualifiers) {
            check_token(q, "qualifier");
        }
        return EventTypeKey(std::move(space), std::move(super_family), std::move(family),
                            std::move(name), std::move(qualifiers));
    }

    /// Inverse of full_key(): the first four tokens are the structural
    /// components, everything after them is a qualifier.
    static EventTypeKey parse(std::string_view full_key) {
        auto tokens = detail::split_subject(full_key);
        if (tokens.size() < 4) {
            throw MalformedKeyError("key has fewer than 4 tokens: \"" + std::string(full_key) + "\"");
        }
        for (const auto& t : tokens) {
            if (!detail::valid_token(t)) {
                throw MalformedKeyError("key token \"" + t + "\" is empty or contains a forbidden character");
            }
        }
        std::vector<std::string> qualifiers(tokens.begin() + 4, tokens.end());
        return EventTypeKey(std::move(tokens[0]), std::move(tokens[1]), std::move(tokens[2]),
                            std::move(tokens[3]), std::move(qualifiers));
    }

    const std::string& space() const { return space_; }
    const std::string& super_family() const { return super_family_; }
    const std::string& family() const { return family_; }
    const std::string& name() const { return name_; }
    const std::vector<std::string>& qualifiers() const { return qualifiers_; }

    /// space.super_family.family.name[.q1[.q2...]] -- the transport subject.
    const std::string& full_key() const { return full_key_; }

    /// space.super_family.family.name, independent of qualifiers. Anchors
    /// serde and validator resolution.
    const std::string& base_key() const { return base_key_; }

    /// space.super_family.family
    std::string group_key() const { return space_ + "." + super_family_ + "." + family_; }

    /// Dot-joined qualifiers, empty string when there are none.
    std::string qualifiers_key() const {
        std::string out;
        for (const auto& q : qualifiers_) {
            if (!out.empty()) {
                out += '.';
            }
            out += q;
        }
        return out;
    }

    bool operator==(const EventTypeKey& other) const {
        return space_ == other.space_ && super_family_ == other.super_family_ &&
               family_ == other.family_ && name_ == other.name_ && qualifiers_ == other.qualifiers_;
    }
    bool operator!=(const EventTypeKey& other) const { return !(*this == other); }

private:
    EventTypeKey(std::string space, std::string super_family, std::string family,
                 std::string name, std::vector<std::string> qualifiers)
        : space_(std::move(space)),
          super_family_(std::move(super_family)),
          family_(std::move(family)),
          name_(std::move(name)),
          qualifiers_(std::move(qualifiers)) {
        base_key_ = space_ + "." + super_family_ + "." + family_ + "." + name_;
        full_key_ = base_key_;
        for (const auto& q : qualifiers_) {
            full_key_ += '.';
            full_key_ += q;
        }
    }

    static void check_token(std::string_view token, const char* role) {
        if (!detail::valid_token(token)) {
            throw InvalidTokenError(std::string(role) + " token \"" + std::string(token) +
                                    "\" is empty or contains a forbidden character");
        }
    }

    std::string space_;
    std::string super_family_;
    std::string family_;
    std::string name_;
    std::vector<std::string> qualifiers_;
    std::string base_key_;
    std::string full_key_;
};

} // namespace cns
