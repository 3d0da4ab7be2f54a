#pragma once

#include <string>

namespace trajagent {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal or on timeout
  bool timed_out = false;
  std::string out;
  std::string err;
};

// Runs `command` through /bin/sh with `input` on stdin. On timeout the whole
// process group is killed. Throws Error(kIo) if the process cannot start.
ProcessResult run_process(const std::string& command, const std::string& input, double timeout_s,
                          const std::string& working_dir = {});

// Exclusive directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "trajagent");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace trajagent
