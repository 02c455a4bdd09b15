#include "storymem/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

namespace storymem {

namespace {

// Returns the byte length of the UTF-8 sequence starting at `b`, treating
// invalid lead bytes as single-byte units so malformed input still walks.
std::size_t seq_len(unsigned char b) {
    if (b < 0x80) return 1;
    if ((b & 0xE0) == 0xC0) return 2;
    if ((b & 0xF0) == 0xE0) return 3;
    if ((b & 0xF8) == 0xF0) return 4;
    return 1;
}

} // namespace

std::size_t utf8_length(const std::string& text) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < text.size(); i += seq_len(static_cast<unsigned char>(text[i])))
        ++count;
    return count;
}

std::string utf8_truncate(const std::string& text, std::size_t max_codepoints) {
    std::size_t i = 0, count = 0;
    while (i < text.size() && count < max_codepoints) {
        i += seq_len(static_cast<unsigned char>(text[i]));
        ++count;
    }
    return text.substr(0, std::min(i, text.size()));
}

std::vector<uint32_t> utf8_decode(const std::string& text) {
    std::vector<uint32_t> out;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char b = static_cast<unsigned char>(text[i]);
        std::size_t len = seq_len(b);
        if (i + len > text.size()) len = 1;
        uint32_t cp = 0;
        switch (len) {
            case 1: cp = b; break;
            case 2: cp = b & 0x1F; break;
            case 3: cp = b & 0x0F; break;
            case 4: cp = b & 0x07; break;
        }
        for (std::size_t j = 1; j < len; ++j)
            cp = (cp << 6) | (static_cast<unsigned char>(text[i + j]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

bool is_cjk_codepoint(uint32_t cp) {
    return (cp >= 0x3400 && cp <= 0x9FFF) ||   // ideographs + extension A
           (cp >= 0xF900 && cp <= 0xFAFF) ||   // compatibility ideographs
           (cp >= 0x3000 && cp <= 0x303F) ||   // CJK punctuation
           (cp >= 0xFF00 && cp <= 0xFFEF) ||   // full-width forms
           (cp >= 0x20000 && cp <= 0x2FFFF);   // extension planes
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(to_lower(text));
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::vector<std::string> mixed_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t len = seq_len(static_cast<unsigned char>(text[i]));
        if (i + len > text.size()) len = 1;
        std::string unit = text.substr(i, len);
        uint32_t cp = utf8_decode(unit).front();
        if (is_cjk_codepoint(cp)) {
            flush();
            tokens.push_back(unit);
        } else if (cp < 0x80 && std::isspace(static_cast<int>(cp))) {
            flush();
        } else {
            current += unit;
        }
        i += len;
    }
    flush();
    return tokens;
}

double dice_similarity(const std::string& a, const std::string& b) {
    auto ta = whitespace_tokens(a);
    auto tb = whitespace_tokens(b);
    std::set<std::string> sa(ta.begin(), ta.end());
    std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    if (sa.empty() || sb.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    return 2.0 * static_cast<double>(common) /
           static_cast<double>(sa.size() + sb.size());
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out = tmpl;
    for (const auto& [name, value] : values) {
        const std::string needle = "{{" + name + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

uint64_t fnv1a64(const std::string& data) {
    uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string fnv1a64_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

std::string canonical_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace storymem
