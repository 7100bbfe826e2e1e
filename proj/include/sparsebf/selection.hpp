// SPDX-License-Identifier: Apache-2.0
//
// P-of-N sensor subsets and the stacked space-time index sets they induce.

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sparsebf/common.hpp"

namespace sparsebf {

/// Ordered subset of the N grid positions. Indices are 0-based and strictly
/// increasing.
class SensorSelection {
public:
    SensorSelection() = default;

    SensorSelection(int n_sensors, std::vector<int> active)
        : n_sensors_(n_sensors), active_(std::move(active)) {
        std::sort(active_.begin(), active_.end());
        validate();
    }

    static SensorSelection full(int n_sensors) {
        std::vector<int> idx(static_cast<std::size_t>(n_sensors));
        for (int k = 0; k < n_sensors; ++k) idx[static_cast<std::size_t>(k)] = k;
        return {n_sensors, std::move(idx)};
    }

    /// Parses a '0'/'1' string, one character per grid position.
    static SensorSelection from_bitmask(const std::string& bits) {
        std::vector<int> idx;
        for (std::size_t k = 0; k < bits.size(); ++k) {
            if (bits[k] == '1') {
                idx.push_back(static_cast<int>(k));
            } else if (bits[k] != '0') {
                throw DomainError("bitmask may contain only '0' and '1': " + bits);
            }
        }
        return {static_cast<int>(bits.size()), std::move(idx)};
    }

    static SensorSelection from_mask(const std::vector<bool>& mask) {
        std::vector<int> idx;
        for (std::size_t k = 0; k < mask.size(); ++k)
            if (mask[k]) idx.push_back(static_cast<int>(k));
        return {static_cast<int>(mask.size()), std::move(idx)};
    }

    int n_sensors() const noexcept { return n_sensors_; }
    int size() const noexcept { return static_cast<int>(active_.size()); }
    const std::vector<int>& active() const noexcept { return active_; }

    bool contains(int k) const { return std::binary_search(active_.begin(), active_.end(), k); }

    std::vector<bool> mask() const {
        std::vector<bool> m(static_cast<std::size_t>(n_sensors_), false);
        for (int k : active_) m[static_cast<std::size_t>(k)] = true;
        return m;
    }

    std::string to_bitmask() const {
        std::string s(static_cast<std::size_t>(n_sensors_), '0');
        for (int k : active_) s[static_cast<std::size_t>(k)] = '1';
        return s;
    }

    /// Rows/columns {k + mN : k active, m = 0..L-1} of an NL x NL matrix,
    /// ordered tap-major to match the stacked data vector.
    std::vector<int> stacked_indices(int taps) const {
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(taps) * active_.size());
        for (int m = 0; m < taps; ++m)
            for (int k : active_) idx.push_back(k + m * n_sensors_);
        return idx;
    }

    friend bool operator==(const SensorSelection&, const SensorSelection&) = default;
    friend auto operator<=>(const SensorSelection& a, const SensorSelection& b) {
        return a.active_ <=> b.active_;
    }

private:
    void validate() const {
        if (n_sensors_ < 1) throw DomainError("selection grid must have at least one sensor");
        for (std::size_t i = 0; i < active_.size(); ++i) {
            if (active_[i] < 0 || active_[i] >= n_sensors_)
                throw DomainError("sensor index out of range: " + std::to_string(active_[i]));
            if (i > 0 && active_[i] == active_[i - 1])
                throw DomainError("duplicate sensor index: " + std::to_string(active_[i]));
        }
    }

    int n_sensors_ = 0;
    std::vector<int> active_;
};

}  // namespace sparsebf
