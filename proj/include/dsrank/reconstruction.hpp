#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "rng.hpp"

namespace dsrank {

/// Link probability of the fitness model: z A_i L_j / (1 + z A_i L_j).
inline double link_probability(double assets, double liabilities, double z) noexcept {
    const double x = z * assets * liabilities;
    return x / (1.0 + x);
}

/// Expected number of directed off-diagonal links at parameter z.
inline double expected_link_count(const MarketSnapshot &snapshot, double z) {
    const auto &banks = snapshot.banks();
    CompensatedSum total;
    for (std::size_t i = 0; i < banks.size(); ++i) {
        const double a = banks[i].interbank_assets;
        if (a == 0.0)
            continue;
        for (std::size_t j = 0; j < banks.size(); ++j)
            if (j != i)
                total += link_probability(a, banks[j].interbank_liabilities, z);
    }
    return total.value();
}

inline std::size_t ordered_pairs(std::size_t n) noexcept { return n * (n - 1); }

/// Pairs i != j with A_i L_j > 0, i.e. links that can exist at all.
inline std::size_t reachable_pairs(const MarketSnapshot &snapshot) {
    std::size_t lenders = 0, borrowers = 0, both = 0;
    for (const auto &b : snapshot.banks()) {
        const bool lends = b.interbank_assets > 0.0;
        const bool borrows = b.interbank_liabilities > 0.0;
        lenders += lends;
        borrowers += borrows;
        both += lends && borrows;
    }
    return lenders * borrowers - both;
}

/**
 * Solve sum_{i != j} p_ij(z) = density * n(n-1) for z by bisection on ln z.
 * The expected link count is strictly increasing in z, so the root is unique.
 */
inline double calibrate_density(const MarketSnapshot &snapshot, double density) {
    if (!(density > 0.0 && density < 1.0))
        throw UsageError("density must lie in (0, 1)");
    const std::size_t n = snapshot.size();
    const double pairs = static_cast<double>(ordered_pairs(n));
    const double target = density * pairs;
    const std::size_t reachable = reachable_pairs(snapshot);
    if (reachable == 0)
        throw DataError("no bank pair with positive assets and liabilities");
    if (target >= static_cast<double>(reachable)) {
        const double max_density = static_cast<double>(reachable) / pairs;
        throw DataError("density " + std::to_string(density) +
                        " is unreachable; maximum attainable density is below " + std::to_string(max_density));
    }

    auto objective = [&](double log_z) { return expected_link_count(snapshot, std::exp(log_z)) - target; };
    double lo = -40.0, hi = 40.0;
    // Monetary units can push the root outside the default bracket.
    for (int widen = 0; widen < 16 && objective(lo) > 0.0; ++widen)
        lo -= 40.0;
    for (int widen = 0; widen < 16 && objective(hi) < 0.0; ++widen)
        hi += 40.0;
    return std::exp(bisect_increasing(objective, lo, hi, 200).root);
}

struct ReconstructionParams {
    double target_density = 0.10;
    double z = 0.0;
    std::size_t ensemble_size = 1000;
    std::uint64_t master_seed = 0;

    static ReconstructionParams calibrated(const MarketSnapshot &snapshot, double density = 0.10,
                                           std::size_t ensemble_size = 1000, std::uint64_t master_seed = 0) {
        return {density, calibrate_density(snapshot, density), ensemble_size, master_seed};
    }
};

/// Loan from `lender` to `borrower`, million USD.
struct Exposure {
    std::uint32_t lender;
    std::uint32_t borrower;
    double amount;
};

/**
 * Sparse matrix of bilateral exposures A_ij, stored as triplets sorted by
 * (lender, borrower). Row i lends, column j borrows; no diagonal.
 */
class ExposureMatrix {
public:
    ExposureMatrix() = default;

    ExposureMatrix(std::size_t n, std::vector<Exposure> entries) : n_(n), entries_(std::move(entries)) {
        std::sort(entries_.begin(), entries_.end(), [](const Exposure &a, const Exposure &b) {
            return a.lender != b.lender ? a.lender < b.lender : a.borrower < b.borrower;
        });
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            const auto &e = entries_[k];
            if (e.lender >= n_ || e.borrower >= n_)
                throw DataError("exposure index out of range");
            if (e.lender == e.borrower)
                throw DataError("self-exposure on bank " + std::to_string(e.lender));
            if (!(e.amount > 0.0) || !std::isfinite(e.amount))
                throw DataError("exposure amounts must be positive and finite");
            if (k > 0 && entries_[k - 1].lender == e.lender && entries_[k - 1].borrower == e.borrower)
                throw DataError("duplicate exposure " + std::to_string(e.lender) + "->" + std::to_string(e.borrower));
        }
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t link_count() const noexcept { return entries_.size(); }
    std::span<const Exposure> entries() const noexcept { return entries_; }

    double realized_density() const noexcept {
        return n_ < 2 ? 0.0 : static_cast<double>(entries_.size()) / static_cast<double>(ordered_pairs(n_));
    }

    /// Total lending of each bank (row sums).
    std::vector<double> lending() const {
        std::vector<double> out(n_, 0.0);
        for (const auto &e : entries_)
            out[e.lender] += e.amount;
        return out;
    }

    /// Total borrowing of each bank (column sums).
    std::vector<double> borrowing() const {
        std::vector<double> out(n_, 0.0);
        for (const auto &e : entries_)
            out[e.borrower] += e.amount;
        return out;
    }

    double total() const noexcept {
        CompensatedSum s;
        for (const auto &e : entries_)
            s += e.amount;
        return s.value();
    }

    /// Scale every amount by `factor` (> 0).
    ExposureMatrix scaled(double factor) const {
        auto copy = entries_;
        for (auto &e : copy)
            e.amount *= factor;
        return ExposureMatrix(n_, std::move(copy));
    }

    friend bool operator==(const ExposureMatrix &a, const ExposureMatrix &b) noexcept {
        if (a.n_ != b.n_ || a.entries_.size() != b.entries_.size())
            return false;
        for (std::size_t k = 0; k < a.entries_.size(); ++k) {
            const auto &x = a.entries_[k];
            const auto &y = b.entries_[k];
            if (x.lender != y.lender || x.borrower != y.borrower || x.amount != y.amount)
                return false;
        }
        return true;
    }

private:
    std::size_t n_ = 0;
    std::vector<Exposure> entries_;
};

/**
 * Draw ensemble member `index`. Each ordered pair i != j consumes one
 * uniform in row-major order; a link gets weight (1/z + A_i L_j) / C, so
 * that E[A_ij] = A_i L_j / C.
 */
inline ExposureMatrix sample_network(const MarketSnapshot &snapshot, const ReconstructionParams &params,
                                     std::uint64_t index) {
    if (!(params.z > 0.0) || !std::isfinite(params.z))
        throw UsageError("sample_network: density parameter z is not calibrated");
    const auto &banks = snapshot.banks();
    const std::size_t n = banks.size();
    const double inv_z = 1.0 / params.z;
    const double volume = snapshot.total_volume();
    Xoshiro256 rng(derive_seed(params.master_seed, Stream::Network, index));
    std::vector<Exposure> entries;
    entries.reserve(static_cast<std::size_t>(params.target_density * static_cast<double>(ordered_pairs(n)) * 1.5) + 16);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = banks[i].interbank_assets;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const double u = rng.uniform();
            const double fitness = a * banks[j].interbank_liabilities;
            if (fitness > 0.0 && u < link_probability(a, banks[j].interbank_liabilities, params.z))
                entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                   (inv_z + fitness) / volume});
        }
    }
    return ExposureMatrix(n, std::move(entries));
}

/**
 * Lazy, indexable ensemble of sampled networks. Member k depends only on
 * (snapshot, params, k).
 */
class Ensemble {
public:
    Ensemble(const MarketSnapshot &snapshot, ReconstructionParams params) : snapshot_(&snapshot), params_(params) {}

    std::size_t size() const noexcept { return params_.ensemble_size; }
    const ReconstructionParams &params() const noexcept { return params_; }
    const MarketSnapshot &snapshot() const noexcept { return *snapshot_; }

    ExposureMatrix operator[](std::size_t index) const { return sample_network(*snapshot_, params_, index); }

    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = ExposureMatrix;
        using difference_type = std::ptrdiff_t;
        using pointer = void;
        using reference = ExposureMatrix;

        iterator() = default;
        iterator(const Ensemble *owner, std::size_t index) : owner_(owner), index_(index) {}

        ExposureMatrix operator*() const { return (*owner_)[index_]; }
        iterator &operator++() {
            ++index_;
            return *this;
        }
        iterator operator++(int) {
            auto copy = *this;
            ++index_;
            return copy;
        }
        bool operator==(const iterator &other) const noexcept { return index_ == other.index_; }

    private:
        const Ensemble *owner_ = nullptr;
        std::size_t index_ = 0;
    };

    iterator begin() const { return {this, 0}; }
    iterator end() const { return {this, size()}; }

private:
    const MarketSnapshot *snapshot_;
    ReconstructionParams params_;
};

inline Ensemble sample_ensemble(const MarketSnapshot &snapshot, const ReconstructionParams &params) {
    return Ensemble(snapshot, params);
}

} // namespace dsrank
