#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "core/error.hpp"
#include "core/template_db.hpp"

namespace fs = std::filesystem;

inline std::string data_path(const std::string& name) { return std::string(TELL_TEST_DATA) + "/" + name; }

// Fresh scratch directory per call, removed by the OS tmp cleaner.
inline fs::path scratch_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("tell-test-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

template <class F>
tell::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const tell::Error& e) {
    return e.code();
  }
  FAIL("expected tell::Error");
  return tell::ErrorCode::Internal;
}

inline const tell::ProblemTemplate& builtin(int type_id) { return *tell::builtin_template_db().find(type_id); }

inline tell::TemplateProblem instance(int type_id, std::uint64_t seed, std::uint64_t index = 0) {
  const auto& db = tell::builtin_template_db();
  tell::Rng rng = tell::Rng::stream(seed, index);
  return tell::instantiate(builtin(type_id), tell::sample_bindings(builtin(type_id), db.pools, rng));
}

inline tell::TmwpSample generated(int type_id, std::uint64_t seed, std::uint64_t index = 0) {
  return tell::to_sample(instance(type_id, seed, index), "t" + std::to_string(type_id) + "-" + std::to_string(index), 5);
}
