#include "attune/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "attune/error.hpp"

namespace attune {

const char* to_string(TokenClass c) {
    switch (c) {
        case TokenClass::Attribute: return "attribute";
        case TokenClass::Instance: return "instance";
        case TokenClass::Background: return "background";
        case TokenClass::Filler: return "filler";
    }
    return "?";
}

std::optional<TokenClass> token_class_from_string(std::string_view s) {
    if (s == "attribute") return TokenClass::Attribute;
    if (s == "instance") return TokenClass::Instance;
    if (s == "background") return TokenClass::Background;
    if (s == "filler") return TokenClass::Filler;
    return std::nullopt;
}

std::optional<std::size_t> PromptSpec::background_index() const {
    for (std::size_t i = 0; i < sub_prompts.size(); ++i) {
        if (sub_prompts[i].background) return i;
    }
    return std::nullopt;
}

std::vector<std::size_t> PromptSpec::tokens_of_class(TokenClass c) const {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < token_classes.size(); ++t) {
        if (token_classes[t] == c) out.push_back(t);
    }
    return out;
}

std::vector<std::size_t> PromptSpec::instance_sub_prompts() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sub_prompts.size(); ++i) {
        if (!sub_prompts[i].background) out.push_back(i);
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::istringstream iss(s);
    std::string w;
    while (iss >> w) words.push_back(w);
    return words;
}

std::size_t parse_count(const std::string& text, int line_no, const char* what) {
    std::istringstream iss(text);
    long long v = -1;
    if (!(iss >> v) || v < 0) {
        throw FormatError("line " + std::to_string(line_no) + ": bad " + what);
    }
    std::string rest;
    if (iss >> rest) {
        throw FormatError("line " + std::to_string(line_no) + ": trailing input after " + what);
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

PromptSpec parse_prompt_spec(std::istream& in) {
    PromptSpec spec;
    bool have_dc = false;
    std::vector<std::pair<std::size_t, TokenClass>> overrides;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;

        if (t.rfind("d_c", 0) == 0) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw FormatError("line " + std::to_string(line_no) + ": expected `d_c = <count>`");
            }
            spec.token_count = parse_count(trim(t.substr(eq + 1)), line_no, "d_c");
            have_dc = true;
        } else if (t.rfind("sub", 0) == 0) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw FormatError("line " + std::to_string(line_no) + ": expected `sub = ...`");
            }
            const std::string body = trim(t.substr(eq + 1));
            if (body.empty() || body[0] != '"') {
                throw FormatError("line " + std::to_string(line_no) + ": sub-prompt label must be quoted");
            }
            const auto close = body.find('"', 1);
            if (close == std::string::npos) {
                throw FormatError("line " + std::to_string(line_no) + ": unterminated label");
            }
            SubPrompt sp;
            sp.label = body.substr(1, close - 1);
            std::istringstream rest(body.substr(close + 1));
            long long b = -1, e = -1;
            if (!(rest >> b >> e) || b < 0 || e < 0) {
                throw FormatError("line " + std::to_string(line_no) + ": expected `<start> <end>` after label");
            }
            sp.begin = static_cast<std::size_t>(b);
            sp.end = static_cast<std::size_t>(e);
            std::string flag;
            if (rest >> flag) {
                if (flag != "background") {
                    throw FormatError("line " + std::to_string(line_no) + ": unknown flag `" + flag + "`");
                }
                sp.background = true;
            }
            spec.sub_prompts.push_back(std::move(sp));
        } else if (t.rfind("tok", 0) == 0) {
            std::istringstream rest(t.substr(3));
            long long idx = -1;
            std::string cls;
            if (!(rest >> idx >> cls) || idx < 0) {
                throw FormatError("line " + std::to_string(line_no) + ": expected `tok <index> <class>`");
            }
            const auto c = token_class_from_string(lower(cls));
            if (!c) {
                throw FormatError("line " + std::to_string(line_no) + ": unknown token class `" + cls + "`");
            }
            overrides.emplace_back(static_cast<std::size_t>(idx), *c);
        } else {
            throw FormatError("line " + std::to_string(line_no) + ": unknown key");
        }
    }

    if (!have_dc) {
        throw FormatError("prompt spec is missing `d_c`");
    }

    // Range validation; file order must already be ascending.
    std::size_t prev_end = 0;
    bool first = true;
    std::size_t background_count = 0;
    for (const auto& sp : spec.sub_prompts) {
        if (sp.begin > sp.end) {
            throw TokenRangeError("sub-prompt \"" + sp.label + "\": start exceeds end");
        }
        if (sp.begin == sp.end) {
            throw EmptySubPromptError("sub-prompt \"" + sp.label + "\" covers no tokens");
        }
        if (sp.end > spec.token_count) {
            throw TokenRangeError("sub-prompt \"" + sp.label + "\" exceeds d_c=" +
                                  std::to_string(spec.token_count));
        }
        // Out-of-order listings trip this check too, not only true overlaps;
        // the grammar requires ascending order so both are rejected here.
        if (!first && sp.begin < prev_end) {
            throw OverlapError("sub-prompt \"" + sp.label + "\" intersects the previous range");
        }
        prev_end = sp.end;
        first = false;
        if (sp.background) ++background_count;
    }
    if (background_count > 1) {
        throw FormatError("at most one sub-prompt may be flagged background");
    }

    spec.token_classes.assign(spec.token_count, TokenClass::Filler);
    spec.explicit_class.assign(spec.token_count, false);
    for (const auto& [idx, cls] : overrides) {
        if (idx >= spec.token_count) {
            throw TokenRangeError("tok override index " + std::to_string(idx) +
                                  " outside [0," + std::to_string(spec.token_count) + ")");
        }
        spec.token_classes[idx] = cls;
        spec.explicit_class[idx] = true;
    }
    return spec;
}

PromptSpec parse_prompt_spec_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open prompt spec: " + path.string());
    }
    return parse_prompt_spec(in);
}

Lexicon parse_lexicon(std::istream& in) {
    Lexicon lex;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::istringstream iss(t);
        std::string word, cls;
        if (!(iss >> word >> cls)) {
            throw FormatError("lexicon line " + std::to_string(line_no) + ": expected `<word> <class>`");
        }
        const auto c = token_class_from_string(lower(cls));
        if (!c) {
            throw FormatError("lexicon line " + std::to_string(line_no) + ": unknown class `" + cls + "`");
        }
        lex[lower(word)] = *c;
    }
    return lex;
}

Lexicon parse_lexicon_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open lexicon: " + path.string());
    }
    return parse_lexicon(in);
}

PromptSpec classify_tokens(const PromptSpec& spec, const Lexicon& lexicon, bool strict) {
    PromptSpec out = spec;
    for (const auto& sp : out.sub_prompts) {
        const auto words = split_words(sp.label);
        const TokenClass fallback = sp.background ? TokenClass::Background : TokenClass::Filler;
        for (std::size_t off = 0; off < sp.length(); ++off) {
            const std::size_t idx = sp.begin + off;
            if (out.explicit_class[idx]) continue;
            if (words.empty()) {
                out.token_classes[idx] = fallback;
                continue;
            }
            const std::string& word = words[std::min(off, words.size() - 1)];
            const auto hit = lexicon.find(lower(word));
            if (hit != lexicon.end()) {
                out.token_classes[idx] = hit->second;
            } else if (strict && !sp.background) {
                throw UnknownWordError("`" + word + "` not in lexicon");
            } else {
                out.token_classes[idx] = fallback;
            }
        }
    }
    for (std::size_t idx = 0; idx < out.token_count; ++idx) {
        bool covered = false;
        for (const auto& sp : out.sub_prompts) {
            if (sp.contains(idx)) { covered = true; break; }
        }
        if (!covered && !out.explicit_class[idx]) {
            out.token_classes[idx] = TokenClass::Filler;
        }
    }
    return out;
}

std::uint64_t prompt_key(const PromptSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ull;
        }
    };
    mix(spec.token_count);
    for (const auto& sp : spec.sub_prompts) {
        for (unsigned char c : sp.label) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        mix(sp.begin);
        mix(sp.end);
        mix(sp.background ? 1 : 0);
    }
    for (TokenClass c : spec.token_classes) {
        mix(static_cast<std::uint64_t>(c));
    }
    return h;
}

}  // namespace attune
