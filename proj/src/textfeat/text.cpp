#include <vframe/textfeat.hpp>

#include <vframe/core/error.hpp>

#include <algorithm>
#include <fstream>
#include <map>

namespace vframe {

namespace {

/// Decodes one UTF-8 sequence at s[i]; invalid bytes decode to U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& i)
{
    const auto b0 = static_cast<unsigned char>(s[i++]);
    if (b0 < 0x80) {
        return b0;
    }
    int extra;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        return 0xFFFD;
    }
    for (int k = 0; k < extra; ++k) {
        if (i >= s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            return 0xFFFD;
        }
        cp = (cp << 6) | (static_cast<unsigned char>(s[i++]) & 0x3F);
    }
    return cp;
}

void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

char32_t to_lower(char32_t c)
{
    if (c >= U'A' && c <= U'Z') {
        return c + 32;
    }
    if (c < 0xC0) {
        return c;
    }
    if (c <= 0xDE) {
        return c == 0xD7 ? c : c + 32;
    }
    if (c >= 0x100 && c <= 0x17F) {
        if (c == 0x130) {
            return U'i';
        }
        if (c == 0x178) {
            return 0xFF;
        }
        const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
        const bool even_upper = (c < 0x138 || (c >= 0x14A && c <= 0x177)) && c != 0x131;
        if (odd_upper && (c & 1)) {
            return c + 1;
        }
        if (!odd_upper && even_upper && !(c & 1)) {
            return c + 1;
        }
        return c;
    }
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) {
        return c + 32;
    }
    if (c == 0x386) {
        return 0x3AC;
    }
    if (c >= 0x388 && c <= 0x38A) {
        return c + 37;
    }
    if (c == 0x38C) {
        return 0x3CC;
    }
    if (c == 0x38E || c == 0x38F) {
        return c + 63;
    }
    if (c >= 0x410 && c <= 0x42F) {
        return c + 32;
    }
    if (c >= 0x400 && c <= 0x40F) {
        return c + 80;
    }
    return c;
}

bool is_word_char(char32_t c)
{
    if (c < 0x80) {
        return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9');
    }
    if (c == 0xFFFD || c < 0xC0 || c == 0xD7 || c == 0xF7) {
        return false;
    }
    // Punctuation and symbol blocks: general punctuation through misc symbols,
    // CJK punctuation, half/full-width forms punctuation, emoji and pictographs.
    if ((c >= 0x2000 && c <= 0x2BFF) || (c >= 0x3000 && c <= 0x303F) || (c >= 0xFE30 && c <= 0xFE4F)
        || (c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) || (c >= 0x1F000 && c <= 0x1FFFF)) {
        return false;
    }
    return true;
}

std::string strip_markup(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] == '<') {
            const auto close = raw.find('>', i + 1);
            if (close != std::string_view::npos) {
                out += ' ';
                i = close + 1;
                continue;
            }
        }
        out += raw[i++];
    }
    return out;
}

std::size_t code_points(std::string_view s)
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size();) {
        next_code_point(s, i);
        ++n;
    }
    return n;
}

} // namespace

std::vector<std::string> tokenize(std::string_view raw, const TermSet& stopwords)
{
    const std::string text = strip_markup(raw);
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !stopwords.contains(current)) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (std::size_t i = 0; i < text.size();) {
        const char32_t cp = next_code_point(text, i);
        if (is_word_char(cp)) {
            append_utf8(current, to_lower(cp));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

Transcript preprocess(std::string_view raw, const TermSet& stopwords, std::string video_id)
{
    return {std::move(video_id), std::string(raw), tokenize(raw, stopwords)};
}

TermSet load_term_list(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open word list " + path.string());
    }
    TermSet out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        for (auto& t : tokenize(line, {})) {
            out.insert(std::move(t));
        }
    }
    return out;
}

std::vector<std::vector<std::string>> chunk_transcript(std::span<const std::string> tokens,
                                                       const TermSet& keywords, std::size_t before,
                                                       std::size_t after)
{
    std::vector<std::vector<std::string>> windows;
    for (std::size_t p = 0; p < tokens.size(); ++p) {
        if (!keywords.contains(tokens[p])) {
            continue;
        }
        const std::size_t first = p >= before ? p - before : 0;
        const std::size_t last = std::min(tokens.size() - 1, p + after);
        windows.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(first),
                             tokens.begin() + static_cast<std::ptrdiff_t>(last + 1));
    }
    return windows;
}

std::string_view emotion_name(Emotion e) noexcept
{
    switch (e) {
    case Emotion::Anger: return "anger";
    case Emotion::Fear: return "fear";
    case Emotion::Anticipation: return "anticipation";
    case Emotion::Trust: return "trust";
    case Emotion::Surprise: return "surprise";
    case Emotion::Sadness: return "sadness";
    case Emotion::Joy: return "joy";
    case Emotion::Disgust: return "disgust";
    case Emotion::Negative: return "negative";
    case Emotion::Positive: return "positive";
    }
    return "";
}

void EmotionLexicon::add(std::string term, Emotion e)
{
    entries[std::move(term)] |= static_cast<std::uint16_t>(1U << static_cast<int>(e));
}

bool EmotionLexicon::has(std::string_view term, Emotion e) const
{
    auto it = entries.find(std::string(term));
    return it != entries.end() && (it->second >> static_cast<int>(e)) & 1U;
}

EmotionLexicon load_lexicon(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open lexicon " + path.string());
    }
    EmotionLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no)
                             + ": expected term<TAB>category<TAB>flag");
        }
        const std::string term = line.substr(0, t1);
        const std::string category = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string flag = line.substr(t2 + 1);
        if (flag != "0" && flag != "1") {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": flag must be 0 or 1");
        }
        int found = -1;
        for (int e = 0; e < emotion_count; ++e) {
            if (category == emotion_name(static_cast<Emotion>(e))) {
                found = e;
            }
        }
        if (found < 0) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown category '"
                             + category + "'");
        }
        if (flag == "1") {
            // Lowercase through the tokenizer so lookups match preprocessed tokens.
            const auto toks = tokenize(term, {});
            if (toks.size() == 1) {
                lex.add(toks.front(), static_cast<Emotion>(found));
            }
        }
    }
    return lex;
}

EmotionProfile emotion_profile(std::span<const std::string> tokens, const EmotionLexicon& lexicon,
                               ProfileNormalization norm)
{
    EmotionProfile counts = EmotionProfile::Zero();
    std::size_t characters = 0;
    for (const auto& tok : tokens) {
        if (norm == ProfileNormalization::Characters) {
            characters += code_points(tok);
        }
        auto it = lexicon.entries.find(tok);
        if (it == lexicon.entries.end()) {
            continue;
        }
        for (int e = 0; e < emotion_count; ++e) {
            if ((it->second >> e) & 1U) {
                counts(e) += 1.0;
            }
        }
    }
    const std::size_t denom = norm == ProfileNormalization::Tokens ? tokens.size() : characters;
    if (denom == 0) {
        return EmotionProfile::Zero();
    }
    return counts / static_cast<double>(denom);
}

std::vector<std::string> build_vocab(std::span<const Transcript> corpus, std::size_t k)
{
    std::map<std::string, std::size_t> freq;
    for (const auto& doc : corpus) {
        for (const auto& t : doc.tokens) {
            ++freq[t];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < std::min(k, items.size()); ++i) {
        vocab.push_back(items[i].first);
    }
    return vocab;
}

Eigen::VectorXd vectorize(std::span<const std::string> tokens, std::span<const std::string> vocab, bool counts)
{
    std::unordered_map<std::string_view, Eigen::Index> pos;
    pos.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        pos.emplace(vocab[i], static_cast<Eigen::Index>(i));
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
    for (const auto& t : tokens) {
        if (auto it = pos.find(t); it != pos.end()) {
            v(it->second) = counts ? v(it->second) + 1.0 : 1.0;
        }
    }
    return v;
}

} // namespace vframe
