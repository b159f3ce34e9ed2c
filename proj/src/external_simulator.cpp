#include "mechemu/errors.hpp"
#include "mechemu/io.hpp"
#include "mechemu/simulators.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace mechemu {

namespace fs = std::filesystem;

namespace {

std::size_t count_occurrences(const std::string& s, const std::string& token) {
    std::size_t n = 0;
    for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos + token.size())) ++n;
    return n;
}

std::string replace_once(std::string s, const std::string& token, const std::string& value) {
    const auto pos = s.find(token);
    return s.replace(pos, token.size(), value);
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

// Owns a per-run scratch directory.
struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& parent) {
        const fs::path base = parent.empty() ? fs::temp_directory_path() : fs::path(parent);
        std::string tmpl = (base / "mechemu-run-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw SimulatorFailure(SimulatorFailure::Reason::Launch,
                                   "cannot create a scratch directory under '" + base.string() + "'");
        }
        path = tmpl;
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
};

std::string tail(const std::string& s, std::size_t max = 4000) {
    return s.size() <= max ? s : s.substr(s.size() - max);
}

}  // namespace

void ExternalSimulatorSpec::validate() const {
    if (count_occurrences(command, "{params}") != 1 || count_occurrences(command, "{output}") != 1) {
        throw InvalidArgument("external command must contain {params} and {output} exactly once each");
    }
    if (!(timeout_s > 0.0)) throw InvalidArgument("external simulator timeout must be positive");
    if (grid.size < 2 || !(grid.step > 0.0)) throw InvalidArgument("external simulator needs an output grid");
}

ExternalSimulator::ExternalSimulator(ParameterSpace space, ExternalSimulatorSpec spec)
    : space_(std::move(space)), spec_(std::move(spec)) {
    spec_.validate();
}

TimeSeries ExternalSimulator::run(const ParameterVector& theta) const {
    if (static_cast<std::size_t>(theta.size()) != space_.size()) {
        throw InvalidArgument("parameter vector length does not match the parameter space");
    }
    ScratchDir dir(spec_.working_directory);
    const fs::path params = dir.path / "params.csv";
    const fs::path output = dir.path / "output.csv";
    const fs::path log = dir.path / "simulator.log";

    std::string text = "name,value\n";
    for (std::size_t i = 0; i < space_.size(); ++i) {
        text += space_[i].name + "," + format_number(theta[static_cast<Eigen::Index>(i)]) + "\n";
    }
    write_text(params, text);
    std::string command = replace_once(spec_.command, "{params}", shell_quote(params.string()));
    command = replace_once(command, "{output}", shell_quote(output.string()));

    const pid_t pid = ::fork();
    if (pid < 0) throw SimulatorFailure(SimulatorFailure::Reason::Launch, "fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            ::dup2(fd, STDOUT_FILENO);
            ::dup2(fd, STDERR_FILENO);
            ::close(fd);
        }
        if (::chdir(dir.path.c_str()) != 0) ::_exit(126);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(spec_.timeout_s);
    int status = 0;
    bool timed_out = false;
    while (true) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) throw SimulatorFailure(SimulatorFailure::Reason::Launch, "waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    std::string captured;
    if (fs::exists(log)) captured = tail(read_text(log));

    if (timed_out) {
        throw SimulatorFailure(SimulatorFailure::Reason::Timeout,
                               "external simulator timed out after " + format_number(spec_.timeout_s) + " s",
                               captured);
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        throw SimulatorFailure(SimulatorFailure::Reason::ExitCode,
                               "external simulator exited with status " + std::to_string(code), captured);
    }
    if (!fs::exists(output)) throw ProtocolError("external simulator wrote no output file");

    TimeSeries series;
    try {
        series = read_time_series(output, "m3/s");
    } catch (const ConfigError& e) {
        throw ProtocolError(std::string("external simulator output: ") + e.what());
    }
    if (series.grid.size != spec_.grid.size) {
        throw ProtocolError("external simulator output has " + std::to_string(series.grid.size) +
                            " rows, expected " + std::to_string(spec_.grid.size));
    }
    if (!series.grid.same_as(spec_.grid)) {
        throw ProtocolError("external simulator output grid (start " + format_number(series.grid.start) + ", step " +
                            format_number(series.grid.step) + ") differs from the expected grid (start " +
                            format_number(spec_.grid.start) + ", step " + format_number(spec_.grid.step) + ")");
    }
    series.grid = spec_.grid;
    return series;
}

}  // namespace mechemu
