#include "asmopt/process.hpp"

#include <fcntl.h>
#include <linux/audit.h>
#include <linux/filter.h>
#include <linux/landlock.h>
#include <linux/seccomp.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <utility>

#include "asmopt/errors.hpp"

extern char** environ;

// Newer Landlock rights; older kernel headers lack them.
#ifndef LANDLOCK_ACCESS_FS_REFER
#define LANDLOCK_ACCESS_FS_REFER (1ULL << 13)
#endif
#ifndef LANDLOCK_ACCESS_FS_TRUNCATE
#define LANDLOCK_ACCESS_FS_TRUNCATE (1ULL << 14)
#endif

namespace asmopt::process {
namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw SandboxSetupError(errno_text("pipe2"));
  return {Fd(fds[0]), Fd(fds[1])};
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

// Syscalls an isolated child may not make at all.
constexpr std::array kDeniedSyscalls = {
    __NR_fork,          __NR_vfork,         __NR_clone,         __NR_clone3,
    __NR_socket,        __NR_ptrace,        __NR_setsid,        __NR_setpgid,
    __NR_unshare,       __NR_setns,         __NR_mount,         __NR_umount2,
    __NR_pivot_root,    __NR_chroot,        __NR_reboot,        __NR_kexec_load,
    __NR_init_module,   __NR_finit_module,  __NR_delete_module, __NR_swapon,
    __NR_swapoff,       __NR_sethostname,   __NR_setdomainname, __NR_settimeofday,
    __NR_clock_settime, __NR_adjtimex,      __NR_bpf,           __NR_perf_event_open,
    __NR_keyctl,        __NR_io_uring_setup, __NR_process_vm_writev,
};

// Signal-sending syscalls: allowed only when the first argument names the
// child itself.
constexpr std::array kSelfOnlySyscalls = {
    __NR_kill, __NR_tkill, __NR_tgkill, __NR_rt_sigqueueinfo, __NR_rt_tgsigqueueinfo,
};

std::vector<sock_filter> build_seccomp_filter(pid_t self) {
  std::vector<sock_filter> prog;
  auto stmt = [&](std::uint16_t code, std::uint32_t k) { prog.push_back(BPF_STMT(code, k)); };

  const std::size_t n_deny = kDeniedSyscalls.size();
  const std::size_t n_self = kSelfOnlySyscalls.size();
  // Layout:
  //   [0] ld arch; [1] jeq x86_64; [2] ret kill; [3] ld nr; [4] jge x32-bit
  //   [5 .. 5+n_deny) jeq denied; then n_self jeq self-only
  //   ALLOW; DENY; SELF: ld arg0; jeq pid; ret allow; ret deny
  const std::size_t first_check = 5;
  const std::size_t allow = first_check + n_deny + n_self;
  const std::size_t deny = allow + 1;
  const std::size_t self_check = deny + 1;
  auto jump_to = [](std::size_t from, std::size_t target) {
    return static_cast<std::uint8_t>(target - (from + 1));
  };

  stmt(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, arch));
  prog.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, AUDIT_ARCH_X86_64, 1, 0));
  stmt(BPF_RET | BPF_K, SECCOMP_RET_KILL_PROCESS);
  stmt(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, nr));
  prog.push_back(BPF_JUMP(BPF_JMP | BPF_JGE | BPF_K, 0x40000000u, jump_to(4, deny), 0));
  for (auto nr : kDeniedSyscalls) {
    const std::size_t at = prog.size();
    prog.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, static_cast<std::uint32_t>(nr),
                            jump_to(at, deny), 0));
  }
  for (auto nr : kSelfOnlySyscalls) {
    const std::size_t at = prog.size();
    prog.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, static_cast<std::uint32_t>(nr),
                            jump_to(at, self_check), 0));
  }
  stmt(BPF_RET | BPF_K, SECCOMP_RET_ALLOW);
  stmt(BPF_RET | BPF_K, SECCOMP_RET_ERRNO | (EPERM & SECCOMP_RET_DATA));
  stmt(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, args[0]));
  prog.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, static_cast<std::uint32_t>(self), 0, 1));
  stmt(BPF_RET | BPF_K, SECCOMP_RET_ALLOW);
  stmt(BPF_RET | BPF_K, SECCOMP_RET_ERRNO | (EPERM & SECCOMP_RET_DATA));
  return prog;
}

int landlock_abi() {
  static const int abi = [] {
    const long v = ::syscall(__NR_landlock_create_ruleset, nullptr, 0,
                             LANDLOCK_CREATE_RULESET_VERSION);
    return v < 0 ? 0 : static_cast<int>(v);
  }();
  return abi;
}

// Ruleset that handles every write-type access and grants it only beneath
// `dir`. Returns an invalid Fd when Landlock is unavailable.
Fd make_landlock_ruleset(const std::filesystem::path& dir) {
  const int abi = landlock_abi();
  if (abi < 1) return {};
  std::uint64_t write_access =
      LANDLOCK_ACCESS_FS_WRITE_FILE | LANDLOCK_ACCESS_FS_REMOVE_DIR |
      LANDLOCK_ACCESS_FS_REMOVE_FILE | LANDLOCK_ACCESS_FS_MAKE_CHAR | LANDLOCK_ACCESS_FS_MAKE_DIR |
      LANDLOCK_ACCESS_FS_MAKE_REG | LANDLOCK_ACCESS_FS_MAKE_SOCK | LANDLOCK_ACCESS_FS_MAKE_FIFO |
      LANDLOCK_ACCESS_FS_MAKE_BLOCK | LANDLOCK_ACCESS_FS_MAKE_SYM;
  if (abi >= 2) write_access |= LANDLOCK_ACCESS_FS_REFER;
  if (abi >= 3) write_access |= LANDLOCK_ACCESS_FS_TRUNCATE;

  landlock_ruleset_attr attr{};
  attr.handled_access_fs = write_access;
  const long rs = ::syscall(__NR_landlock_create_ruleset, &attr, sizeof attr, 0);
  if (rs < 0) throw SandboxSetupError(errno_text("landlock_create_ruleset"));
  Fd ruleset(static_cast<int>(rs));
  ::fcntl(ruleset.get(), F_SETFD, FD_CLOEXEC);

  Fd dir_fd(::open(dir.c_str(), O_PATH | O_CLOEXEC | O_DIRECTORY));
  if (!dir_fd.valid()) throw SandboxSetupError(errno_text("open writable dir"));
  landlock_path_beneath_attr rule{};
  rule.allowed_access = write_access;
  rule.parent_fd = dir_fd.get();
  if (::syscall(__NR_landlock_add_rule, ruleset.get(), LANDLOCK_RULE_PATH_BENEATH, &rule, 0) != 0) {
    throw SandboxSetupError(errno_text("landlock_add_rule"));
  }
  return ruleset;
}

[[noreturn]] void child_fail(int status_fd, int err) {
  (void)!::write(status_fd, &err, sizeof err);
  ::_exit(127);
}

void set_limit(int resource, std::uint64_t value) {
  rlimit rl{static_cast<rlim_t>(value), static_cast<rlim_t>(value)};
  ::setrlimit(resource, &rl);
}

void kill_group(pid_t pid) {
  ::kill(-pid, SIGKILL);
  ::kill(pid, SIGKILL);
}

}  // namespace

Result run(const Command& cmd, const Limits& limits) {
  if (cmd.argv.empty()) throw SandboxSetupError("empty command");
  ignore_sigpipe_once();

  // Everything the child needs is prepared before fork: after fork only
  // async-signal-safe calls are made.
  std::vector<char*> argv;
  for (const auto& a : cmd.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  static const std::array<std::string, 3> kCleanEnv = {"PATH=/usr/bin:/bin", "LANG=C", "LC_ALL=C"};
  std::vector<char*> envp;
  if (limits.clean_env) {
    for (const auto& e : kCleanEnv) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);
  }
  char** env = limits.clean_env ? envp.data() : environ;

  const std::string cwd = cmd.cwd.empty() ? std::string() : cmd.cwd.string();

  Fd stdin_file;
  Pipe in_pipe;
  if (cmd.stdin_file) {
    stdin_file = Fd(::open(cmd.stdin_file->c_str(), O_RDONLY | O_CLOEXEC));
    if (!stdin_file.valid()) throw SandboxSetupError(errno_text("open stdin file"));
  } else {
    in_pipe = make_pipe();
  }
  Pipe out_pipe;
  Fd dev_null;
  if (cmd.stdout_mode == StdoutMode::Capture) {
    out_pipe = make_pipe();
  } else {
    dev_null = Fd(::open("/dev/null", O_WRONLY | O_CLOEXEC));
    if (!dev_null.valid()) throw SandboxSetupError(errno_text("open /dev/null"));
  }
  Pipe err_pipe = make_pipe();
  Pipe status_pipe = make_pipe();

  Fd ruleset;
  if (limits.isolate && limits.writable_dir) ruleset = make_landlock_ruleset(*limits.writable_dir);

  std::optional<std::uint64_t> cpu_limit;
  if (limits.wall_timeout) {
    cpu_limit = static_cast<std::uint64_t>(std::ceil(limits.wall_timeout->count())) + 1;
  }

  // The self-only check compares against the child's pid; the child patches
  // that instruction in its own copy of the filter.
  std::vector<sock_filter> filter;
  std::size_t pid_slot = 0;
  if (limits.isolate) {
    filter = build_seccomp_filter(0);
    pid_slot = filter.size() - 3;
  }

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw SandboxSetupError(errno_text("fork"));

  if (pid == 0) {
    const int status_fd = status_pipe.write.get();
    ::setpgid(0, 0);
    const int in_fd = stdin_file.valid() ? stdin_file.get() : in_pipe.read.get();
    const int out_fd = out_pipe.write.valid() ? out_pipe.write.get() : dev_null.get();
    if (::dup2(in_fd, STDIN_FILENO) < 0 || ::dup2(out_fd, STDOUT_FILENO) < 0 ||
        ::dup2(err_pipe.write.get(), STDERR_FILENO) < 0) {
      child_fail(status_fd, errno);
    }
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) child_fail(status_fd, errno);

    set_limit(RLIMIT_CORE, 0);
    if (limits.max_memory) set_limit(RLIMIT_AS, *limits.max_memory);
    if (limits.max_file_size) set_limit(RLIMIT_FSIZE, *limits.max_file_size);
    if (cpu_limit) set_limit(RLIMIT_CPU, *cpu_limit);
    if (limits.pin_cpu) {
      cpu_set_t set;
      CPU_ZERO(&set);
      CPU_SET(*limits.pin_cpu, &set);
      ::sched_setaffinity(0, sizeof set, &set);
    }
    if (limits.isolate) {
      if (::prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) child_fail(status_fd, errno);
      if (ruleset.valid() && ::syscall(__NR_landlock_restrict_self, ruleset.get(), 0) != 0) {
        child_fail(status_fd, errno);
      }
      filter[pid_slot].k = static_cast<std::uint32_t>(::getpid());
      sock_fprog fprog{static_cast<unsigned short>(filter.size()), filter.data()};
      if (::prctl(PR_SET_SECCOMP, SECCOMP_MODE_FILTER, &fprog) != 0) child_fail(status_fd, errno);
    }
    ::execve(argv[0], argv.data(), env);
    child_fail(status_fd, errno);
  }

  // Parent.
  ::setpgid(pid, pid);  // also done in the child; whichever runs first wins
  in_pipe.read.reset();
  out_pipe.write.reset();
  err_pipe.write.reset();
  status_pipe.write.reset();
  stdin_file.reset();
  dev_null.reset();
  ruleset.reset();

  Fd pidfd(static_cast<int>(::syscall(SYS_pidfd_open, pid, 0)));

  Result result;
  std::size_t in_offset = 0;
  if (in_pipe.write.valid()) {
    if (cmd.stdin_data.empty()) {
      in_pipe.write.reset();
    } else {
      set_nonblocking(in_pipe.write.get());
    }
  }
  if (out_pipe.read.valid()) set_nonblocking(out_pipe.read.get());
  set_nonblocking(err_pipe.read.get());

  std::optional<std::chrono::steady_clock::time_point> deadline;
  if (limits.wall_timeout) {
    deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(*limits.wall_timeout);
  }

  bool exited = false;
  int wait_status = 0;
  std::optional<Termination> forced;
  std::chrono::steady_clock::time_point end{};
  std::array<char, 65536> buf;

  auto drain = [&](Fd& fd, std::string& sink, std::optional<std::uint64_t> cap, bool is_stdout) {
    while (fd.valid()) {
      const ssize_t n = ::read(fd.get(), buf.data(), buf.size());
      if (n > 0) {
        std::size_t take = static_cast<std::size_t>(n);
        if (cap && sink.size() + take > *cap) {
          take = static_cast<std::size_t>(*cap - std::min<std::uint64_t>(*cap, sink.size()));
          sink.append(buf.data(), take);
          if (is_stdout && !forced && !exited) {
            forced = Termination::OutputLimit;
            kill_group(pid);
          }
          if (is_stdout) {
            fd.reset();
            return;
          }
          continue;
        }
        sink.append(buf.data(), take);
        continue;
      }
      if (n == 0) {
        fd.reset();
        return;
      }
      if (errno == EINTR) continue;
      return;  // EAGAIN
    }
  };

  auto reap = [&](bool block) {
    const pid_t r = ::waitpid(pid, &wait_status, block ? 0 : WNOHANG);
    if (r == pid) {
      exited = true;
      end = std::chrono::steady_clock::now();
      // Anything left in the group is a straggler.
      ::kill(-pid, SIGKILL);
    }
  };

  std::optional<std::chrono::steady_clock::time_point> drain_deadline;
  while (true) {
    if (!exited) reap(false);
    if (exited) {
      if (!drain_deadline) drain_deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
      if ((!out_pipe.read.valid() && !err_pipe.read.valid()) ||
          std::chrono::steady_clock::now() > *drain_deadline) {
        break;
      }
    }

    std::vector<pollfd> fds;
    if (in_pipe.write.valid() && !exited) fds.push_back({in_pipe.write.get(), POLLOUT, 0});
    if (out_pipe.read.valid()) fds.push_back({out_pipe.read.get(), POLLIN, 0});
    if (err_pipe.read.valid()) fds.push_back({err_pipe.read.get(), POLLIN, 0});
    if (pidfd.valid() && !exited) fds.push_back({pidfd.get(), POLLIN, 0});

    int wait_ms = pidfd.valid() ? 100 : 5;
    const auto now = std::chrono::steady_clock::now();
    if (deadline && !exited) {
      if (now >= *deadline) {
        forced = Termination::TimedOut;
        kill_group(pid);
        reap(true);
        continue;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - now).count() + 1;
      wait_ms = static_cast<int>(std::min<long long>(wait_ms, left));
    }
    if (exited) wait_ms = 10;

    const int pr = ::poll(fds.data(), fds.size(), wait_ms);
    if (pr < 0 && errno != EINTR) {
      kill_group(pid);
      if (!exited) reap(true);
      throw SandboxSetupError(errno_text("poll"));
    }
    for (const auto& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == in_pipe.write.get()) {
        if (p.revents & (POLLERR | POLLHUP)) {
          in_pipe.write.reset();
          continue;
        }
        const ssize_t n = ::write(in_pipe.write.get(), cmd.stdin_data.data() + in_offset,
                                  cmd.stdin_data.size() - in_offset);
        if (n > 0) {
          in_offset += static_cast<std::size_t>(n);
          if (in_offset == cmd.stdin_data.size()) in_pipe.write.reset();
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          in_pipe.write.reset();  // EPIPE: the child stopped reading
        }
      } else if (p.fd == out_pipe.read.get()) {
        drain(out_pipe.read, result.out, limits.max_output, true);
      } else if (p.fd == err_pipe.read.get()) {
        drain(err_pipe.read, result.err, limits.max_stderr, false);
      }
    }
  }
  if (!exited) reap(true);

  int child_errno = 0;
  if (::read(status_pipe.read.get(), &child_errno, sizeof child_errno) == sizeof child_errno) {
    throw SandboxSetupError(std::string("cannot execute ") + cmd.argv[0] + ": " +
                            std::strerror(child_errno));
  }

  result.wall_seconds = std::chrono::duration<double>(end - start).count();
  if (forced) {
    result.termination = *forced;
  } else if (WIFSIGNALED(wait_status)) {
    result.termination = Termination::Signaled;
    result.signal = WTERMSIG(wait_status);
  } else {
    result.termination = Termination::Exited;
    result.exit_code = WEXITSTATUS(wait_status);
  }
  return result;
}

std::filesystem::path find_executable(const std::filesystem::path& name) {
  if (name.is_absolute()) {
    if (::access(name.c_str(), X_OK) == 0) return name;
    throw ConfigError("not executable: " + name.string());
  }
  if (name.has_parent_path()) {
    auto abs = std::filesystem::absolute(name);
    if (::access(abs.c_str(), X_OK) == 0) return abs;
    throw ConfigError("not executable: " + name.string());
  }
  const char* path_env = std::getenv("PATH");
  std::string_view path = path_env ? path_env : "/usr/bin:/bin";
  while (!path.empty()) {
    const auto colon = path.find(':');
    const auto dir = path.substr(0, colon);
    if (!dir.empty()) {
      auto candidate = std::filesystem::path(dir) / name;
      if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    if (colon == std::string_view::npos) break;
    path.remove_prefix(colon + 1);
  }
  throw ConfigError("executable not found on PATH: " + name.string());
}

ScratchDir::ScratchDir(const std::filesystem::path& root, const std::string& prefix) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  std::string tmpl = (root / (prefix + "-XXXXXX")).string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw SandboxSetupError(errno_text("mkdtemp"));
  path_ = tmpl;
}

ScratchDir::ScratchDir(ScratchDir&& other) noexcept
    : path_(std::move(other.path_)), keep_(other.keep_) {
  other.path_.clear();
}

ScratchDir& ScratchDir::operator=(ScratchDir&& other) noexcept {
  if (this != &other) {
    remove();
    path_ = std::move(other.path_);
    keep_ = other.keep_;
    other.path_.clear();
  }
  return *this;
}

ScratchDir::~ScratchDir() { remove(); }

void ScratchDir::remove() noexcept {
  if (path_.empty() || keep_) return;
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path default_scratch_root() {
  std::error_code ec;
  auto base = std::filesystem::temp_directory_path(ec);
  if (ec) base = "/tmp";
  return base / "asmopt";
}

}  // namespace asmopt::process
