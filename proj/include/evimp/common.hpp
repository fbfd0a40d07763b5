#pragma once

// Shared plumbing: error types, a fully specified seedable RNG, hashing,
// number formatting and atomic file output.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evimp {

// Data/format problems in an input artifact (exit code 2 at the CLI).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A record references an id that does not exist (exit code 2).
struct ReferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation was called outside its contract (exit code 2).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN / divergence during numeric work (exit code 3).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Rng: mt19937_64 core with fully specified derivations, so that identical
// seeds give identical streams on every platform (std::uniform_int_distribution
// is implementation-defined; these draws are not).
class Rng {
  public:
    explicit Rng(uint64_t seed = 42) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, bound). bound must be > 0.
    uint64_t below(uint64_t bound) {
        if (bound == 0) throw ContractError("Rng::below: bound must be > 0");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    size_t index(size_t size) { return static_cast<size_t>(below(size)); }

    // Uniform double in [0, 1) with 53 random bits.
    double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return real() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in ascending order.
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        std::vector<size_t> all(n);
        for (size_t i = 0; i < n; ++i) all[i] = i;
        if (k >= n) return all;
        // Partial Fisher-Yates, then sort the chosen prefix.
        for (size_t i = 0; i < k; ++i) {
            const size_t j = i + index(n - i);
            std::swap(all[i], all[j]);
        }
        all.resize(k);
        std::sort(all.begin(), all.end());
        return all;
    }

  private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit, used for content hashes and per-document seed derivation.
inline uint64_t fnv1a64(std::string_view data, uint64_t h = 0xcbf29ce484222325ull) {
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t derive_seed(uint64_t global_seed, std::string_view doc_id) {
    uint64_t h = fnv1a64(doc_id);
    h ^= global_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

// ---------------------------------------------------------------------------
// Float formatting: shortest decimal that round-trips the value exactly.
inline std::string format_float(float v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

inline std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Atomic output: write to <path>.tmp in the same directory, then rename.
// A killed run never leaves a half-written artifact under the target path.
template <class WriteFn>
void atomic_write(const std::string& path, WriteFn&& fn) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp";
    try {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        fn(out);
        out.flush();
        if (!out) throw IoError("write failed: " + tmp);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("rename failed for " + path + ": " + ec.message());
    }
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return in;
}

// ---------------------------------------------------------------------------
inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        const size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace evimp
