#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace cepro {

// Insertion-ordered JSON so serialized files keep the documented key order.
using OJson = nlohmann::ordered_json;

namespace io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

OJson parse_json(const std::string& content, const std::string& what);
OJson read_json(const std::string& path);
void write_json(const std::string& path, const OJson& value);  // dump(2) + newline

std::vector<OJson> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<OJson>& rows);

}  // namespace io
}  // namespace cepro
