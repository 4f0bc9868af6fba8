#pragma once
// Dense row-major matrices plus the one piece of numerical linear algebra
// the experiments need: a symmetric eigensolver (cyclic Jacobi sweeps).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "infogap/error.hpp"
#include "infogap/io.hpp"

namespace infogap {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool square() const { return rows == cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline double trace(const Matrix& m) {
    if (!m.square()) throw DimensionError("trace: matrix must be square");
    double t = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) t += m.at(i, i);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw DimensionError("matmul: inner dimensions disagree");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    }
    return c;
}

inline std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
    if (m.cols != v.size()) throw DimensionError("matvec: dimension mismatch");
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m.at(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
    return t;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data) s += v * v;
    return std::sqrt(s);
}

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;
};

// Symmetric eigendecomposition by cyclic Jacobi rotations.
// The input is symmetrized by averaging with its transpose first; pairs come
// back sorted by eigenvalue, largest first, with unit-norm eigenvectors.
inline std::vector<EigenPair> sym_eigen(const Matrix& m) {
    if (!m.square()) throw DimensionError("sym_eigen: matrix must be square");
    if (!m.all_finite()) throw DataError("sym_eigen: matrix has non-finite entries");
    const std::size_t n = m.rows;
    if (n == 0) throw DimensionError("sym_eigen: empty matrix");

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a.at(i, j) = 0.5 * (m.at(i, j) + m.at(j, i));
    Matrix v = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a.at(i, j) * a.at(i, j);
        return std::sqrt(2.0 * s);
    };

    const double scale = frobenius_norm(a);
    const double tol = (scale == 0.0) ? 0.0 : 1e-14 * scale;
    const int max_sweeps = 100;

    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (std::abs(apq) <= tol * 1e-2) continue;
                double app = a.at(p, p), aqq = a.at(q, q);
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                        : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<EigenPair> pairs(n);
    for (std::size_t i = 0; i < n; ++i) {
        pairs[i].value = a.at(i, i);
        pairs[i].vector.resize(n);
        double norm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            pairs[i].vector[k] = v.at(k, i);
            norm += v.at(k, i) * v.at(k, i);
        }
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (auto& x : pairs[i].vector) x /= norm;
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const EigenPair& x, const EigenPair& y) { return x.value > y.value; });
    return pairs;
}

// ---- serialization ---------------------------------------------------------

// CSV: one row per line, shortest round-trip decimals, no header.
inline std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out += ',';
            out += format_double(m.at(i, j));
        }
        out += '\n';
    }
    return out;
}

inline Matrix matrix_from_csv(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty()) throw DataError("matrix_from_csv: empty input");
    Matrix m;
    m.rows = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto fields = split_csv_line(lines[i]);
        if (i == 0) {
            m.cols = fields.size();
        } else if (fields.size() != m.cols) {
            throw DataError("matrix_from_csv: ragged rows");
        }
        for (const auto& f : fields) m.data.push_back(parse_double(f));
    }
    return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.data;
    return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw DataError("matrix_from_json: data size mismatch");
    return m;
}

}  // namespace infogap
