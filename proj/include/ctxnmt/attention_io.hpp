#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ctxnmt/model.hpp"

namespace ctxnmt {

/// An attention record with the input geometry it was produced from.
struct ExportedAttention {
  std::size_t id = 0;
  AttentionRecord record;
  std::size_t source_focus_start = 0;
  std::vector<std::size_t> source_breaks;
  std::string break_token = "_BREAK_";
};

/// One JSON object per line: id, source, target, source_focus_start,
/// source_breaks, break_token, rows, cols and a row-major weight array.
std::string to_json_line(const ExportedAttention& a);
ExportedAttention from_json_line(const std::string& line, const std::string& origin = "<attention>",
                                 std::size_t lineno = 0);

void write_attention(const std::filesystem::path& path, const std::vector<ExportedAttention>& records);
std::vector<ExportedAttention> read_attention(const std::filesystem::path& path);

}  // namespace ctxnmt
