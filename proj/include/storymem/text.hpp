#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace storymem {

// UTF-8 helpers. Memory capacity and generation limits are measured in
// codepoints so multibyte text is not penalized for its encoding.
std::size_t utf8_length(const std::string& text);
std::string utf8_truncate(const std::string& text, std::size_t max_codepoints);
std::vector<uint32_t> utf8_decode(const std::string& text);

// Lowercased whitespace tokens.
std::vector<std::string> whitespace_tokens(const std::string& text);

// Per-character tokens for CJK codepoints, whitespace tokens otherwise.
// A CJK character flushes any pending Latin token even without a space.
std::vector<std::string> mixed_tokens(const std::string& text);

bool is_cjk_codepoint(uint32_t cp);

// Dice coefficient over the distinct lowercased whitespace tokens of both
// strings. 1.0 when both token sets are empty.
double dice_similarity(const std::string& a, const std::string& b);

// "{{name}}" placeholder substitution.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

// FNV-1a, used for config hashes and state checksums.
uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);

// Fixed %.9g float formatting for serialized real values.
std::string canonical_real(double value);

std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string trim(const std::string& s);
std::string to_lower(const std::string& s);

} // namespace storymem
