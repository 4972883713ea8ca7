#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attune {

enum class TokenClass { Attribute, Instance, Background, Filler };

const char* to_string(TokenClass c);
std::optional<TokenClass> token_class_from_string(std::string_view s);

/// One contiguous token span. `background` marks the span whose image region
/// is the complement of all sketch masks.
struct SubPrompt {
    std::string label;
    std::size_t begin = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    bool background = false;

    std::size_t length() const { return end - begin; }
    bool contains(std::size_t token) const { return token >= begin && token < end; }
};

struct PromptSpec {
    std::size_t token_count = 0;
    std::vector<SubPrompt> sub_prompts;
    std::vector<TokenClass> token_classes;  // size token_count
    std::vector<bool> explicit_class;       // per-token `tok` overrides

    std::optional<std::size_t> background_index() const;
    std::vector<std::size_t> tokens_of_class(TokenClass c) const;
    /// Indices of sub-prompts that carry a sketch mask (all non-background
    /// ones, in file order).
    std::vector<std::size_t> instance_sub_prompts() const;
};

// Prompt spec file grammar (line oriented, `#` starts a full-line comment):
//   d_c = <count>
//   sub = "<label>" <start> <end> [background]
//   tok <index> <class>          class in {attribute,instance,background,filler}
// Ranges are half-open [start,end), must be listed in ascending order,
// disjoint, non-empty and inside [0,d_c). At most one sub-prompt may be
// flagged background. Tokens not covered by a `tok` line start as Filler.
PromptSpec parse_prompt_spec(std::istream& in);
PromptSpec parse_prompt_spec_file(const std::filesystem::path& path);

/// Lowercased surface word -> class.
using Lexicon = std::map<std::string, TokenClass>;

// Lexicon file: lines of `<word> <class>`.
Lexicon parse_lexicon(std::istream& in);
Lexicon parse_lexicon_file(const std::filesystem::path& path);

/// Assigns a class to every token. Within a sub-prompt, token i pairs with
/// word min(i, words-1) of the label (trailing tokens extend the last word,
/// mirroring sub-word tokenization). Precedence per token: explicit `tok`
/// override, then lexicon hit, then Background for background-flagged spans,
/// then Filler. Strict mode throws UnknownWordError for words missing from
/// the lexicon, except inside background-flagged spans which always have a
/// defined default.
PromptSpec classify_tokens(const PromptSpec& spec, const Lexicon& lexicon, bool strict = false);

/// Stable hash of the full prompt content; seeds the pseudo-embeddings so
/// different prompts produce different text streams.
std::uint64_t prompt_key(const PromptSpec& spec);

}  // namespace attune
