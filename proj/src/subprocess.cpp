#include "subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "imt/errors.hpp"

namespace imt {

Subprocess::Subprocess(const std::string& command, const std::vector<std::string>& args) {
  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw AdapterError(std::string("pipe failed: ") + std::strerror(errno));

  pid_ = fork();
  if (pid_ < 0) throw AdapterError(std::string("fork failed: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(command.c_str()));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(command.c_str(), argv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

Subprocess::~Subprocess() { terminate(); }

void Subprocess::terminate() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

bool Subprocess::alive() const {
  if (pid_ <= 0) return false;
  int status = 0;
  return waitpid(pid_, &status, WNOHANG) == 0;
}

void Subprocess::write_line(const std::string& line) {
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t remaining = data.size();
  // A dying child raises SIGPIPE; ignore it and report the write error.
  signal(SIGPIPE, SIG_IGN);
  while (remaining > 0) {
    ssize_t n = ::write(to_child_, p, remaining);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError("write to policy process failed: " + std::string(std::strerror(errno)) +
                         " (request was: " + line + ")");
    }
    p += n;
    remaining -= static_cast<std::size_t>(n);
  }
}

std::string Subprocess::read_line(long timeout_ms) {
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    struct pollfd pfd = {from_child_, POLLIN, 0};
    int ready = poll(&pfd, 1, static_cast<int>(timeout_ms));
    if (ready == 0)
      throw AdapterError("policy process timed out after " + std::to_string(timeout_ms) +
                         "ms (partial data: '" + buffer_ + "')");
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw AdapterError(std::string("poll failed: ") + std::strerror(errno));
    }
    char chunk[4096];
    ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError(std::string("read from policy process failed: ") + std::strerror(errno));
    }
    if (n == 0)
      throw AdapterError("policy process closed its output (partial data: '" + buffer_ + "')");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace imt
