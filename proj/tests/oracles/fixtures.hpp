#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

// One-token edit of a test question: the leading word becomes a word no
// reference question uses.
inline std::string plant(const std::string& q) {
  auto end = q.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ");
  return "Zephyr" + q.substr(end);
}

}  // namespace oracle
