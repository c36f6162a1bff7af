#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "npprompt/tensorio.hpp"

namespace npprompt {

/// Affine map x -> (x - mean) * transform that decorrelates contextual
/// states. `transform` is d x d, row-major.
struct WhiteningTransform {
    std::vector<double> mean;
    std::vector<double> transform;

    std::size_t dim() const noexcept { return mean.size(); }
};

inline constexpr double kWhiteningEigenFloor = 1e-8;

/// Fits on an n x d sample using the population covariance
/// (transform = U * Lambda^{-1/2}, eigenvalues floored at 1e-8).
WhiteningTransform fit_whitening(const Tensor& sample);

std::vector<double> whiten(std::span<const double> vec, const WhiteningTransform& w);
std::vector<double> whiten(std::span<const float> vec, const WhiteningTransform& w);

/// Whitens every row of an n x d matrix.
Tensor whiten_rows(const Tensor& rows, const WhiteningTransform& w);

/// Stored as one [d + 1, d] tensor: row 0 is the mean, the rest the transform.
void write_whitening(const std::filesystem::path& path, const WhiteningTransform& w);
WhiteningTransform read_whitening(const std::filesystem::path& path);

} // namespace npprompt
