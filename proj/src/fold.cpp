#include "ribodesign/fold.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <list>
#include <mutex>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "ribodesign/error.hpp"

namespace ribodesign {

class FoldCache {
public:
    explicit FoldCache(std::size_t capacity) : capacity_(capacity) {}

    std::optional<std::string> get(const std::string& key) {
        std::lock_guard lock(mutex_);
        auto it = index_.find(key);
        if (it == index_.end()) {
            ++misses_;
            return std::nullopt;
        }
        ++hits_;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    void put(const std::string& key, const std::string& value) {
        if (capacity_ == 0) return;
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(key); it != index_.end()) {
            order_.splice(order_.begin(), order_, it->second);
            return;
        }
        order_.emplace_front(key, value);
        index_.emplace(key, order_.begin());
        if (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }

    std::size_t hits() const {
        std::lock_guard lock(mutex_);
        return hits_;
    }
    std::size_t misses() const {
        std::lock_guard lock(mutex_);
        return misses_;
    }

private:
    using Entry = std::pair<std::string, std::string>;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

FoldingEngine::FoldingEngine(Kind kind, std::size_t min_loop, std::string command, std::size_t cache_capacity)
    : kind_(kind),
      min_hairpin_loop_(min_loop),
      command_(std::move(command)),
      cache_(std::make_shared<FoldCache>(cache_capacity)) {}

FoldingEngine FoldingEngine::internal(std::size_t min_hairpin_loop, std::size_t cache_capacity) {
    if (min_hairpin_loop < 3) {
        throw Error(ErrorCode::InvalidConfig, "min_hairpin_loop must be >= 3");
    }
    return FoldingEngine(Kind::InternalNussinov, min_hairpin_loop, {}, cache_capacity);
}

FoldingEngine FoldingEngine::external(std::string command, std::size_t cache_capacity) {
    if (command.empty()) throw Error(ErrorCode::InvalidConfig, "external folder command is empty");
    return FoldingEngine(Kind::ExternalCommand, 0, std::move(command), cache_capacity);
}

FoldingEngine FoldingEngine::from_spec(std::string_view spec) {
    if (spec == "internal") return internal();
    constexpr std::string_view prefix = "external:";
    if (spec.substr(0, prefix.size()) == prefix) return external(std::string(spec.substr(prefix.size())));
    throw Error(ErrorCode::InvalidConfig, "engine must be 'internal' or 'external:<cmd>', got '" +
                                              std::string(spec) + "'");
}

std::string FoldingEngine::describe() const {
    if (kind_ == Kind::InternalNussinov) return "internal";
    return "external:" + command_;
}

Structure FoldingEngine::fold(const Sequence& seq) const {
    if (auto hit = cache_->get(seq.str())) return Structure(std::move(*hit));
    Structure s = fold_uncached(seq.str());
    cache_->put(seq.str(), s.str());
    return s;
}

Structure FoldingEngine::fold(std::string_view seq) const { return fold(Sequence(std::string(seq))); }

std::size_t FoldingEngine::cache_hits() const { return cache_->hits(); }
std::size_t FoldingEngine::cache_misses() const { return cache_->misses(); }

Structure FoldingEngine::fold_uncached(const std::string& seq) const {
    if (kind_ == Kind::InternalNussinov) return nussinov_fold(seq, min_hairpin_loop_);
    const std::string output = run_command(command_, seq + "\n");
    return Structure(parse_folder_output(output, seq.size()));
}

namespace {

// Row-major upper-triangular score table; entries with j < i read as zero.
class ScoreTable {
public:
    explicit ScoreTable(std::size_t n) : n_(n), data_(n * n, 0) {}
    int operator()(std::size_t i, std::size_t j) const { return (j < i || j >= n_) ? 0 : data_[i * n_ + j]; }
    int& at(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

private:
    std::size_t n_;
    std::vector<int> data_;
};

// Value of closing j with partner k on interval [i, j].
int pair_score(const ScoreTable& t, std::size_t i, std::size_t k, std::size_t j) {
    const int left = k > i ? t(i, k - 1) : 0;
    return left + 1 + t(k + 1, j - 1);
}

ScoreTable fill_table(std::string_view seq, std::size_t min_loop) {
    const std::size_t n = seq.size();
    ScoreTable t(n);
    for (std::size_t span = min_loop + 1; span < n; ++span) {
        for (std::size_t i = 0; i + span < n; ++i) {
            const std::size_t j = i + span;
            int best = t(i, j - 1);
            for (std::size_t k = i; k + min_loop < j; ++k) {
                if (can_pair(seq[k], seq[j])) best = std::max(best, pair_score(t, i, k, j));
            }
            t.at(i, j) = best;
        }
    }
    return t;
}

}  // namespace

std::size_t nussinov_max_pairs(std::string_view seq, std::size_t min_loop) {
    if (seq.empty()) return 0;
    return static_cast<std::size_t>(fill_table(seq, min_loop)(0, seq.size() - 1));
}

Structure nussinov_fold(std::string_view seq, std::size_t min_loop) {
    const std::size_t n = seq.size();
    if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot fold an empty sequence");
    const ScoreTable t = fill_table(seq, min_loop);

    std::string out(n, '.');
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        while (j > i && j - i > min_loop) {
            const int target = t(i, j);
            std::optional<std::size_t> partner;
            for (std::size_t k = i; k + min_loop < j; ++k) {
                if (can_pair(seq[k], seq[j]) && pair_score(t, i, k, j) == target) {
                    partner = k;
                    break;
                }
            }
            if (!partner) {
                --j;
                continue;
            }
            const std::size_t k = *partner;
            out[k] = '(';
            out[j] = ')';
            if (k > i) stack.emplace_back(i, k - 1);
            i = k + 1;
            --j;
        }
    }
    return Structure(std::move(out));
}

std::vector<std::size_t> elongation_schedule(std::size_t length, std::size_t speed) {
    if (speed == 0) throw Error(ErrorCode::InvalidConfig, "elongation speed must be >= 1");
    std::vector<std::size_t> out;
    for (std::size_t l = speed; l < length; l += speed) out.push_back(l);
    out.push_back(length);
    return out;
}

CotranscriptionalTrace cotranscriptional_fold(const FoldingEngine& engine, const Sequence& seq,
                                              std::size_t speed) {
    CotranscriptionalTrace trace;
    trace.prefix_lengths = elongation_schedule(seq.size(), speed);
    trace.prefix_structures.reserve(trace.prefix_lengths.size());
    for (std::size_t len : trace.prefix_lengths) {
        trace.prefix_structures.push_back(engine.fold(Sequence(seq.str().substr(0, len))));
    }
    return trace;
}

namespace {

struct Enumerator {
    std::string_view seq;
    std::size_t min_loop;
    std::string current;
    std::vector<std::size_t> open;
    std::size_t pairs = 0;
    BruteForceResult result;

    void run(std::size_t pos) {
        const std::size_t n = seq.size();
        if (open.size() > n - pos) return;
        if (pos == n) {
            if (pairs > result.max_pairs) {
                result.max_pairs = pairs;
                result.all_optimal.clear();
            }
            if (pairs == result.max_pairs) result.all_optimal.insert(current);
            return;
        }
        current[pos] = '.';
        run(pos + 1);

        current[pos] = '(';
        open.push_back(pos);
        run(pos + 1);
        open.pop_back();

        if (!open.empty()) {
            const std::size_t k = open.back();
            if (pos - k > min_loop && can_pair(seq[k], seq[pos])) {
                current[pos] = ')';
                open.pop_back();
                ++pairs;
                run(pos + 1);
                --pairs;
                open.push_back(k);
            }
        }
        current[pos] = '.';
    }
};

}  // namespace

BruteForceResult brute_force_fold(const Sequence& seq, std::size_t min_loop) {
    if (seq.size() > kBruteForceMaxLength) {
        throw Error(ErrorCode::TooLong, "brute force folding supports at most " +
                                            std::to_string(kBruteForceMaxLength) + " nt");
    }
    Enumerator e{seq.str(), min_loop, std::string(seq.size(), '.'), {}, 0, {}};
    e.run(0);
    return std::move(e.result);
}

namespace {

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

std::string run_command(const std::string& command, const std::string& input) {
    ignore_sigpipe_once();
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw Error(ErrorCode::ExternalFolderFailure, "pipe() failed");
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw Error(ErrorCode::ExternalFolderFailure, "pipe() failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
        throw Error(ErrorCode::ExternalFolderFailure, "fork() failed");
    }
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);

    std::size_t written = 0;
    while (written < input.size()) {
        const ssize_t w = ::write(to_child[1], input.data() + written, input.size() - written);
        if (w < 0) {
            if (errno == EINTR) continue;
            break;  // child closed stdin early; its exit status decides
        }
        written += static_cast<std::size_t>(w);
    }
    ::close(to_child[1]);

    std::string output;
    char buf[4096];
    for (;;) {
        const ssize_t r = ::read(from_child[0], buf, sizeof buf);
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) break;
        output.append(buf, static_cast<std::size_t>(r));
    }
    ::close(from_child[0]);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw Error(ErrorCode::ExternalFolderFailure,
                    "command '" + command + "' exited with status " +
                        std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
    }
    return output;
}

std::string parse_folder_output(std::string_view output, std::size_t length) {
    std::istringstream lines{std::string(output)};
    std::string line;
    for (int n = 0; n < 2 && std::getline(lines, line); ++n) {
        std::istringstream tokens(line);
        std::string token;
        if (!(tokens >> token)) continue;
        if (token.size() != length) continue;
        try {
            parse_dot_bracket(token);
            return token;
        } catch (const Error&) {
        }
    }
    throw Error(ErrorCode::ExternalFolderFailure,
                "no dot-bracket of length " + std::to_string(length) + " in folder output");
}

}  // namespace ribodesign
