#include "cepro/io.hpp"

#include <fstream>
#include <sstream>

#include "cepro/error.hpp"
#include "cepro/text.hpp"

namespace cepro::io {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

OJson parse_json(const std::string& content, const std::string& what) {
  try {
    return OJson::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

OJson read_json(const std::string& path) {
  return parse_json(read_file(path), path);
}

void write_json(const std::string& path, const OJson& value) {
  write_file(path, value.dump(2) + "\n");
}

std::vector<OJson> read_jsonl(const std::string& path) {
  std::vector<OJson> rows;
  const std::string content = read_file(path);
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(OJson::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::string& path, const std::vector<OJson>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace cepro::io
