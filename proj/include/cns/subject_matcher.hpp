#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cns/errors.hpp"
#include "cns/event_key.hpp"

namespace cns {

/// Wildcard-aware subject pattern with NATS semantics: tokens are dot
/// separated, '*' matches exactly one subject token, a trailing '>' matches
/// one or more remaining tokens. Compiled once at subscription time; matching
/// is pure and lock-free.
class SubscriptionPattern {
public:
    static SubscriptionPattern compile(std::string_view pattern) {
        if (pattern.empty()) {
            throw MalformedPatternError("pattern is empty");
        }
        auto tokens = detail::split_subject(pattern);
        SubscriptionPattern out;
        out.text_.assign(pattern);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const std::string& t = tokens[i];
            if (t == ">") {
                if (i + 1 != tokens.size()) {
                    throw MalformedPatternError("'>' must be the final token: \"" + out.text_ + "\"");
                }
                out.trailing_multi_ = true;
                break;
            }
            if (t == "*") {
                out.tokens_.push_back(Token{TokenKind::Single, {}});
                continue;
            }
            if (!detail::valid_token(t)) {
                throw MalformedPatternError("pattern token \"" + t +
                                            "\" is empty or contains a forbidden character");
            }
            out.tokens_.push_back(Token{TokenKind::Literal, t});
        }
        if (out.tokens_.empty() && !out.trailing_multi_) {
            throw MalformedPatternError("pattern has no tokens: \"" + out.text_ + "\"");
        }
        return out;
    }

    /// True iff the subject aligns token-for-token. Subjects are expected to
    /// be wildcard-free; a malformed subject (empty token) never matches.
    bool matches(std::string_view subject) const {
        std::size_t pos = 0;
        for (const Token& token : tokens_) {
            if (pos > subject.size()) {
                return false;
            }
            std::size_t dot = subject.find('.', pos);
            std::size_t end = (dot == std::string_view::npos) ? subject.size() : dot;
            if (end == pos) {
                return false; // empty subject token
            }
            std::string_view sub_token = subject.substr(pos, end - pos);
            if (token.kind == TokenKind::Literal && sub_token != token.text) {
                return false;
            }
            pos = (dot == std::string_view::npos) ? subject.size() + 1 : dot + 1;
        }
        if (trailing_multi_) {
            // '>' needs at least one remaining non-empty token.
            if (pos > subject.size() || pos == subject.size()) {
                return false;
            }
            std::string_view rest = subject.substr(pos);
            if (rest.front() == '.' || rest.back() == '.' ||
                rest.find("..") != std::string_view::npos) {
                return false;
            }
            return true;
        }
        return pos == subject.size() + 1;
    }

    const std::string& text() const { return text_; }

    bool operator==(const SubscriptionPattern& other) const { return text_ == other.text_; }

private:
    enum class TokenKind { Literal, Single };
    struct Token {
        TokenKind kind;
        std::string text;
    };

    std::vector<Token> tokens_;
    bool trailing_multi_ = false;
    std::string text_;
};

inline bool subject_matches(const SubscriptionPattern& pattern, std::string_view subject) {
    return pattern.matches(subject);
}

} // namespace cns
