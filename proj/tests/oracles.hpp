#pragma once

// Independent reference computations used to derive and freeze expected values.

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
inline double golden_section_argmax(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// N * KL(Y/N || mu): the Bernoulli log-likelihood ratio at the unconstrained MLE.
inline double kl_score(double y, double n, double mu) {
    const double p = y / n;
    double s = 0.0;
    if (p > 0) s += y * std::log(p / mu);
    if (p < 1) s += (n - y) * std::log((1 - p) / (1 - mu));
    return s;
}

/// Plug-in mutual information (nats) of a joint count table.
inline double mutual_information(const std::vector<std::vector<double>>& table) {
    double total = 0;
    std::vector<double> rows(table.size(), 0), cols(table[0].size(), 0);
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < table[i].size(); ++j) {
            rows[i] += table[i][j];
            cols[j] += table[i][j];
            total += table[i][j];
        }
    double mi = 0;
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < table[i].size(); ++j)
            if (table[i][j] > 0) {
                const double p = table[i][j] / total;
                mi += p * std::log(p / ((rows[i] / total) * (cols[j] / total)));
            }
    return mi;
}

/// Hoyer sparsity straight from the definition, no rescaling.
inline double hoyer(const std::vector<double>& v) {
    double l1 = 0, l2 = 0;
    for (double x : v) {
        l1 += std::abs(x);
        l2 += x * x;
    }
    const double c = std::sqrt(static_cast<double>(v.size()));
    return (c - l1 / std::sqrt(l2)) / (c - 1);
}

/// Temporary file that removes itself.
class temp_file {
public:
    explicit temp_file(const std::string& content, const std::string& suffix = ".csv") {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("safs_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + suffix);
        std::ofstream(path_, std::ios::binary) << content;
    }
    ~temp_file() { std::filesystem::remove(path_); }
    temp_file(const temp_file&) = delete;
    temp_file& operator=(const temp_file&) = delete;
    std::string path() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

/// Fresh scratch directory, removed with its contents.
class temp_dir {
public:
    temp_dir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("safs_dir_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~temp_dir() { std::filesystem::remove_all(path_); }
    temp_dir(const temp_dir&) = delete;
    temp_dir& operator=(const temp_dir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace oracle
