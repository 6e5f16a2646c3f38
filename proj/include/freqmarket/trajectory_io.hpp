#pragma once

#include "freqmarket/dynamics.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace freqmarket {

/// "%.12g".
std::string format_number(double value);

/// Column names: t, omega_1..n, b_1..n, pg_mw_1..n, lambda, V.
std::vector<std::string> trajectory_header(std::size_t buses);

/// Comma-separated trajectory file. A repeated time stamp marks an event: the
/// first row carries V against the old reference, the second against the new.
class TrajectoryWriter {
public:
    TrajectoryWriter(const std::filesystem::path& path, std::size_t buses);

    void write(double time, const SystemState& x, double lyapunov);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

struct TrajectoryTable {
    std::size_t buses = 0;
    std::vector<double> time;
    std::vector<Vector> omega;
    std::vector<Vector> bid;
    std::vector<Vector> p_gen_mw;
    std::vector<double> lambda;
    std::vector<double> lyapunov;

    std::size_t rows() const noexcept { return time.size(); }
};

/// Throws std::runtime_error with the offending line number.
TrajectoryTable read_trajectory(const std::filesystem::path& path);

}  // namespace freqmarket
