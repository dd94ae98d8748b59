// Copyright (c) crosslink authors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "crosslink/bytes.hpp"

namespace crosslink::test {

inline std::string fixture_path(const std::string& name) {
  return std::string(CROSSLINK_FIXTURE_DIR) + "/" + name;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline Bytes read_hex_fixture(const std::string& name) {
  std::string text = read_text_file(fixture_path(name));
  std::string hex;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) hex.push_back(c);
  return from_hex(hex);
}

// key=hex lines, as written by gen_crypto_kat.py.
inline std::map<std::string, Bytes> load_kat(const std::string& name = "crypto_kat.txt") {
  std::map<std::string, Bytes> out;
  std::istringstream in(read_text_file(fixture_path(name)));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad KAT line: " + line);
    out[line.substr(0, eq)] = from_hex(line.substr(eq + 1));
  }
  return out;
}

}  // namespace crosslink::test
