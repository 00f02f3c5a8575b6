#include "ctxnmt/attention_io.hpp"

#include <json.hpp>

#include "ctxnmt/error.hpp"
#include "ctxnmt/text.hpp"

namespace ctxnmt {

std::string to_json_line(const ExportedAttention& a) {
  const auto& w = a.record.weights;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(w.size()));
  for (Index r = 0; r < w.rows(); ++r) {
    for (Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
  }
  nlohmann::ordered_json j;
  j["id"] = a.id;
  j["source"] = a.record.source_tokens;
  j["target"] = a.record.target_tokens;
  j["source_focus_start"] = a.source_focus_start;
  j["source_breaks"] = a.source_breaks;
  j["break_token"] = a.break_token;
  j["rows"] = w.rows();
  j["cols"] = w.cols();
  j["weights"] = flat;
  return j.dump();
}

ExportedAttention from_json_line(const std::string& line, const std::string& origin,
                                 std::size_t lineno) {
  ExportedAttention a;
  try {
    const auto j = nlohmann::json::parse(line);
    a.id = j.at("id").get<std::size_t>();
    a.record.source_tokens = j.at("source").get<Tokens>();
    a.record.target_tokens = j.at("target").get<Tokens>();
    a.source_focus_start = j.at("source_focus_start").get<std::size_t>();
    a.source_breaks = j.at("source_breaks").get<std::vector<std::size_t>>();
    a.break_token = j.at("break_token").get<std::string>();
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto flat = j.at("weights").get<std::vector<double>>();
    if (rows != static_cast<Index>(a.record.target_tokens.size()) ||
        cols != static_cast<Index>(a.record.source_tokens.size()) ||
        static_cast<Index>(flat.size()) != rows * cols) {
      throw MalformedDataError(origin, lineno, "attention matrix shape disagrees with token arrays");
    }
    a.record.weights.resize(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) a.record.weights(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedDataError(origin, lineno, std::string("bad attention record: ") + e.what());
  }
  return a;
}

void write_attention(const std::filesystem::path& path, const std::vector<ExportedAttention>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json_line(r));
  write_lines(path, lines);
}

std::vector<ExportedAttention> read_attention(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<ExportedAttention> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    out.push_back(from_json_line(lines[i], path.string(), i + 1));
  }
  return out;
}

}  // namespace ctxnmt
