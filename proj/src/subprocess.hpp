#pragma once

#include <string>
#include <vector>

namespace imt {

/// Line-oriented child process: spawns command+args with stdin/stdout
/// pipes, writes single lines and reads single newline-terminated replies
/// with a poll() timeout. Owns the process; the destructor terminates it.
class Subprocess {
 public:
  Subprocess(const std::string& command, const std::vector<std::string>& args);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  /// Writes line + '\n'. Throws AdapterError on a broken pipe.
  void write_line(const std::string& line);

  /// Reads one line (without the newline). Throws AdapterError on EOF or
  /// timeout, including the partial data read so far.
  std::string read_line(long timeout_ms);

  bool alive() const;

 private:
  void terminate();

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace imt
