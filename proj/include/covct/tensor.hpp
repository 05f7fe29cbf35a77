#pragma once

#include <cstddef>
#include <vector>

#include "covct/errors.hpp"

namespace covct {

/// Row-major CHW (or flat) numeric array.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, fill);
    }

    int dim(std::size_t i) const { return shape[i]; }
    std::size_t size() const { return data.size(); }

    // CHW accessors
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    bool operator==(const Tensor&) const = default;
};

} // namespace covct
