#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctxnmt {

using Tokens = std::vector<std::string>;

/// Splits on single spaces. Empty tokens (double spaces, leading or
/// trailing space) are rejected by the caller via validate_tokens.
Tokens split_tokens(std::string_view line);
std::string join_tokens(const Tokens& tokens, std::string_view sep = " ");

/// True when every token is non-empty and whitespace-free.
bool valid_tokens(const Tokens& tokens);

/// UTF-8 code-point split. Invalid bytes are passed through one at a time.
std::vector<std::string> utf8_chars(std::string_view text);

/// Per-character lowercase for ASCII and the Latin-1 supplement.
std::string lowercase(std::string_view text);

/// Reads a text file into lines, stripping LF (and a trailing CR).
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes one line per entry with LF endings.
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

/// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// CRC-32 of a file's bytes, formatted as 8 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace ctxnmt
