#include <cerrno>
#include <csignal>
#include <cstring>
#include <ctime>

#include <poll.h>
#include <pthread.h>
#include <sys/wait.h>
#include <unistd.h>

#include "revfraud/attacksim/attacksim.hpp"
#include "revfraud/errors.hpp"

namespace revfraud::attacksim {

namespace {

std::string join(std::span<const std::string> words, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

std::string render_block(std::span<const std::string> keywords, const std::string& answer) {
  std::string block = "Q: " + join(keywords, ", ") + "\nA:";
  if (!answer.empty()) block += " " + answer;
  return block;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string Prompt::render() const {
  std::string out;
  for (const auto& ex : examples) {
    out += render_block(ex.keywords, ex.review);
    out += '\n';
  }
  out += render_block(query, "");
  return out;
}

Prompt build_prompt(std::vector<PromptExample> examples, std::vector<std::string> query) {
  if (query.empty()) throw ContractError("build_prompt: empty query");
  return Prompt{std::move(examples), std::move(query)};
}

std::vector<std::string> query_keywords_of(const std::string& rendered_prompt) {
  // The query block is always the last two lines: "Q: ..." then "A:".
  if (rendered_prompt.size() < 2 || rendered_prompt.compare(rendered_prompt.size() - 2, 2, "A:") != 0) {
    throw GenerationError("prompt does not end with an empty answer slot");
  }
  const std::size_t a_line = rendered_prompt.size() - 2;
  if (a_line == 0 || rendered_prompt[a_line - 1] != '\n') throw GenerationError("malformed prompt");
  const std::size_t q_end = a_line - 1;
  const std::size_t q_start = rendered_prompt.rfind('\n', q_end == 0 ? 0 : q_end - 1);
  const std::size_t begin = q_start == std::string::npos ? 0 : q_start + 1;
  const std::string q_line = rendered_prompt.substr(begin, q_end - begin);
  if (q_line.rfind("Q: ", 0) != 0) throw GenerationError("prompt query line does not start with 'Q: '");
  std::vector<std::string> out;
  std::string rest = q_line.substr(3);
  std::size_t pos = 0;
  while (pos <= rest.size()) {
    const std::size_t comma = rest.find(", ", pos);
    const std::string word = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!word.empty()) out.push_back(word);
    if (comma == std::string::npos) break;
    pos = comma + 2;
  }
  return out;
}

std::string EchoGenerator::generate(const std::string& rendered_prompt) {
  const auto words = query_keywords_of(rendered_prompt);
  if (words.empty()) throw GenerationError("echo generator: empty query");
  return join(words, " ");
}

ExternalCommandGenerator::ExternalCommandGenerator(std::string command) : command_(std::move(command)) {
  if (command_.empty()) throw ConfigError("external generator command is empty");
}

std::string ExternalCommandGenerator::generate(const std::string& rendered_prompt) {
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) throw GenerationError(std::string("pipe: ") + std::strerror(errno));
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw GenerationError(std::string("pipe: ") + std::strerror(errno));
  }

  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
    throw GenerationError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  // A child that exits before reading its input must not kill us with SIGPIPE.
  sigset_t pipe_set;
  sigset_t old_set;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);

  std::string output;
  std::size_t written = 0;
  int write_fd = to_child[1];
  if (rendered_prompt.empty()) {
    close(write_fd);
    write_fd = -1;
  }
  int read_fd = from_child[0];
  char buf[4096];
  while (read_fd >= 0) {
    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {read_fd, POLLIN, 0};
    if (write_fd >= 0) fds[n++] = {write_fd, POLLOUT, 0};
    if (poll(fds, n, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (write_fd >= 0 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = write(write_fd, rendered_prompt.data() + written, rendered_prompt.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 || written == rendered_prompt.size()) {
        close(write_fd);
        write_fd = -1;
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t r = read(read_fd, buf, sizeof buf);
      if (r > 0) {
        output.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || errno != EINTR) {
        close(read_fd);
        read_fd = -1;
      }
    }
  }
  if (write_fd >= 0) close(write_fd);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  sigset_t pending;
  sigpending(&pending);
  if (sigismember(&pending, SIGPIPE)) {
    const timespec zero{0, 0};
    sigtimedwait(&pipe_set, nullptr, &zero);
  }
  pthread_sigmask(SIG_SETMASK, &old_set, nullptr);

  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw GenerationError("generator command '" + command_ + "' failed");
  }
  std::string review = trim(output);
  if (review.empty()) throw GenerationError("generator command '" + command_ + "' produced no output");
  return review;
}

}  // namespace revfraud::attacksim
