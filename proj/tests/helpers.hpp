#pragma once

// Shared test oracles and utilities, implemented independently of the
// library code they check.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace testhelp {

// Closed-form line rasterization: walk the major axis, minor offset is
// round-half-up of the exact crossing, computed in integers.
inline std::vector<std::pair<int, int>> oracle_line(int x0, int y0, int x1, int y1) {
    std::vector<std::pair<int, int>> px;
    const int adx = std::abs(x1 - x0), ady = std::abs(y1 - y0);
    const int sx = x1 >= x0 ? 1 : -1, sy = y1 >= y0 ? 1 : -1;
    if (adx >= ady) {
        for (int i = 0; i <= adx; ++i) {
            const int steps = adx == 0 ? 0 : (2 * i * ady + adx) / (2 * adx);
            px.emplace_back(x0 + sx * i, y0 + sy * steps);
        }
    } else {
        for (int i = 0; i <= ady; ++i) {
            const int steps = (2 * i * adx + ady) / (2 * ady);
            px.emplace_back(x0 + sx * steps, y0 + sy * i);
        }
    }
    return px;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace testhelp
