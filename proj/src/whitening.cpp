#include "npprompt/whitening.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "npprompt/error.hpp"

namespace npprompt {

WhiteningTransform fit_whitening(const Tensor& sample) {
    if (sample.rank() != 2 || sample.rows() < 2) {
        throw Error(ErrorCode::InsufficientSample, "whitening needs at least two sample rows");
    }
    const auto n = static_cast<Eigen::Index>(sample.rows());
    const auto d = static_cast<Eigen::Index>(sample.cols());
    if (d == 0) {
        throw Error(ErrorCode::DimensionMismatch, "whitening sample has zero width");
    }

    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = sample.row(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < d; ++j) {
            x(i, j) = r[static_cast<std::size_t>(j)];
        }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::DegenerateVector, "covariance eigendecomposition failed");
    }
    Eigen::VectorXd scale = eig.eigenvalues();
    for (Eigen::Index j = 0; j < d; ++j) {
        scale(j) = 1.0 / std::sqrt(std::max(scale(j), kWhiteningEigenFloor));
    }
    // Eigenvector signs are arbitrary; fix them so the largest component is positive.
    Eigen::MatrixXd basis = eig.eigenvectors();
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index arg = 0;
        basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, j) < 0.0) {
            basis.col(j) = -basis.col(j);
        }
    }
    const Eigen::MatrixXd t = basis * scale.asDiagonal();

    WhiteningTransform w;
    w.mean.assign(mean.data(), mean.data() + d);
    w.transform.resize(static_cast<std::size_t>(d * d));
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            w.transform[static_cast<std::size_t>(i * d + j)] = t(i, j);
        }
    }
    return w;
}

namespace {

template <typename T>
std::vector<double> whiten_impl(std::span<const T> vec, const WhiteningTransform& w) {
    const std::size_t d = w.dim();
    if (vec.size() != d) {
        throw Error(ErrorCode::DimensionMismatch, "vector has dimension " +
                                                      std::to_string(vec.size()) +
                                                      ", transform expects " + std::to_string(d));
    }
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < d; ++i) {
        centered[i] = static_cast<double>(vec[i]) - w.mean[i];
    }
    std::vector<double> out(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double c = centered[i];
        const double* t = &w.transform[i * d];
        for (std::size_t j = 0; j < d; ++j) {
            out[j] += c * t[j];
        }
    }
    return out;
}

} // namespace

std::vector<double> whiten(std::span<const double> vec, const WhiteningTransform& w) {
    return whiten_impl(vec, w);
}

std::vector<double> whiten(std::span<const float> vec, const WhiteningTransform& w) {
    return whiten_impl(vec, w);
}

Tensor whiten_rows(const Tensor& rows, const WhiteningTransform& w) {
    if (rows.rank() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "expected a matrix to whiten");
    }
    Tensor out = Tensor::matrix(rows.rows(), w.dim());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto v = whiten(rows.row(i), w);
        std::transform(v.begin(), v.end(), out.row(i).begin(),
                       [](double x) { return static_cast<float>(x); });
    }
    return out;
}

void write_whitening(const std::filesystem::path& path, const WhiteningTransform& w) {
    const std::size_t d = w.dim();
    Tensor t = Tensor::matrix(d + 1, d);
    auto& data = t.data();
    for (std::size_t j = 0; j < d; ++j) {
        data[j] = static_cast<float>(w.mean[j]);
    }
    for (std::size_t i = 0; i < d * d; ++i) {
        data[d + i] = static_cast<float>(w.transform[i]);
    }
    write_tensor(path, t);
}

WhiteningTransform read_whitening(const std::filesystem::path& path) {
    const Tensor t = read_tensor(path);
    if (t.rank() != 2 || t.rows() != t.cols() + 1) {
        throw Error(ErrorCode::DimensionMismatch, path.string() + ": expected a [d+1, d] tensor");
    }
    const std::size_t d = t.cols();
    WhiteningTransform w;
    w.mean.assign(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(d));
    w.transform.assign(t.data().begin() + static_cast<std::ptrdiff_t>(d), t.data().end());
    return w;
}

} // namespace npprompt
