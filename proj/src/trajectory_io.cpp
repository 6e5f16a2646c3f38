#include "freqmarket/trajectory_io.hpp"

#include "freqmarket/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace freqmarket {

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

std::vector<std::string> trajectory_header(std::size_t buses) {
    std::vector<std::string> h{"t"};
    for (const char* prefix : {"omega_", "b_", "pg_mw_"}) {
        for (std::size_t i = 1; i <= buses; ++i) h.push_back(prefix + std::to_string(i));
    }
    h.emplace_back("lambda");
    h.emplace_back("V");
    return h;
}

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path, std::size_t buses)
    : out_(path) {
    if (!out_) throw std::runtime_error("cannot write trajectory file '" + path.string() + "'");
    const auto header = trajectory_header(buses);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void TrajectoryWriter::write(double time, const SystemState& x, double lyapunov) {
    std::string row = format_number(time);
    const auto append = [&](const Vector& v, double scale) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            row += ',';
            row += format_number(scale * v[i]);
        }
    };
    append(x.omega, 1.0);
    append(x.bid, 1.0);
    append(x.p_gen, kPerUnitBaseMW);
    row += ',' + format_number(x.lambda) + ',' + format_number(lyapunov) + '\n';
    out_ << row;
}

TrajectoryTable read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    std::size_t columns = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (columns < 6 || (columns - 3) % 3 != 0) {
        throw std::runtime_error(path.string() + ":1: unexpected column count");
    }
    TrajectoryTable t;
    t.buses = (columns - 3) / 3;
    {
        const auto expected = trajectory_header(t.buses);
        std::istringstream hs(line);
        std::string name;
        for (std::size_t i = 0; std::getline(hs, name, ','); ++i) {
            if (!name.empty() && name.back() == '\r') name.pop_back();
            if (name != expected[i]) {
                throw std::runtime_error(path.string() + ":1: expected column '" + expected[i] +
                                         "', found '" + name + "'");
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(t.buses);
    std::vector<double> values;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty() || line == "\r") continue;
        values.clear();
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end) {
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": malformed number");
            }
            values.push_back(v);
            p = next;
            if (p < end && (*p == ',' || *p == '\r')) ++p;
        }
        if (values.size() != columns) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(columns) + " fields");
        }
        t.time.push_back(values[0]);
        t.omega.push_back(Eigen::Map<const Vector>(values.data() + 1, n));
        t.bid.push_back(Eigen::Map<const Vector>(values.data() + 1 + n, n));
        t.p_gen_mw.push_back(Eigen::Map<const Vector>(values.data() + 1 + 2 * n, n));
        t.lambda.push_back(values[columns - 2]);
        t.lyapunov.push_back(values[columns - 1]);
    }
    return t;
}

}  // namespace freqmarket
