#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gesgpt/motion.hpp"
#include "gesgpt/util.hpp"

namespace testing {

inline std::string fixture(const std::string& relative) { return std::string(GESGPT_FIXTURES_DIR) + "/" + relative; }

inline std::string read_fixture(const std::string& relative) { return gesgpt::read_file(fixture(relative)); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gesgpt_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::string> joint_names(std::size_t joints) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < joints; ++j) names.push_back("j" + std::to_string(j));
  return names;
}

inline gesgpt::MotionClip random_clip(std::mt19937_64& rng, std::size_t frames, std::size_t joints, double fps = 25.0) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> data(frames * joints * 3);
  for (double& v : data) v = dist(rng);
  return gesgpt::MotionClip(fps, joint_names(joints), std::move(data));
}

// One joint moving on x only.
inline gesgpt::MotionClip line_clip(const std::vector<double>& xs, double fps) {
  std::vector<double> data;
  for (double x : xs) data.insert(data.end(), {x, 0.0, 0.0});
  return gesgpt::MotionClip(fps, {"j0"}, std::move(data));
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

// Runs a shell command, capturing stdout (and stderr when merged by the caller).
inline CommandResult run(const std::string& command) {
  CommandResult r;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string cli() { return GESGPT_CLI_PATH; }

inline std::string quote(const std::string& s) { return "'" + s + "'"; }

}  // namespace testing
