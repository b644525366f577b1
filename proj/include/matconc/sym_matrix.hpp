#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace matconc {

using RectMatrix = Eigen::MatrixXd;

/// Dense real symmetric matrix. Construction validates near-symmetry of the
/// input (absolute tolerance 1e-12 * max|entry|) and then mirrors the upper
/// triangle so that stored entries are exactly symmetric.
class SymMatrix {
public:
    explicit SymMatrix(Eigen::MatrixXd entries) {
        if (entries.rows() < 1 || entries.rows() != entries.cols()) {
            throw std::invalid_argument("SymMatrix: input must be square with dim >= 1");
        }
        const double scale = entries.cwiseAbs().maxCoeff();
        const double tol = 1e-12 * scale;
        for (Eigen::Index i = 0; i < entries.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < entries.cols(); ++j) {
                if (std::abs(entries(i, j) - entries(j, i)) > tol) {
                    throw std::invalid_argument("SymMatrix: input is not symmetric");
                }
                entries(j, i) = entries(i, j);
            }
        }
        mat_ = std::move(entries);
    }

    static SymMatrix zero(int dim) {
        return SymMatrix(Eigen::MatrixXd::Zero(dim, dim));
    }

    static SymMatrix identity(int dim) {
        return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
    }

    static SymMatrix diagonal(const Eigen::VectorXd& d) {
        return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
    }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXd& mat() const { return mat_; }
    double operator()(int i, int j) const { return mat_(i, j); }

    double trace() const { return mat_.trace(); }

    SymMatrix scaled(double c) const { return SymMatrix(c * mat_); }

private:
    Eigen::MatrixXd mat_;
};

/// Eigendecomposition with eigenvalues sorted in descending order and
/// orthonormal eigenvector columns.
struct Spectrum {
    Eigen::VectorXd eigenvalues;   // descending
    Eigen::MatrixXd eigenvectors;  // column j pairs with eigenvalues[j]

    int dim() const { return static_cast<int>(eigenvalues.size()); }
};

namespace io {

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Symmetric matrix text format: first line "d", then d rows of d
/// whitespace-separated decimals.
inline void write_sym(std::ostream& os, const SymMatrix& a) {
    os << a.dim() << "\n";
    for (int i = 0; i < a.dim(); ++i) {
        for (int j = 0; j < a.dim(); ++j) {
            os << (j ? " " : "") << format_value(a(i, j));
        }
        os << "\n";
    }
}

inline void write_sym(const std::string& path, const SymMatrix& a) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_sym(os, a);
}

inline SymMatrix read_sym(std::istream& is) {
    int d = 0;
    if (!(is >> d) || d < 1) {
        throw std::runtime_error("symmetric matrix file: bad dimension header");
    }
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (!(is >> m(i, j))) {
                throw std::runtime_error("symmetric matrix file: truncated entries");
            }
        }
    }
    return SymMatrix(std::move(m));  // validates symmetry
}

inline SymMatrix read_sym(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_sym(is);
}

/// Rectangular variant: first line "rows cols", then the entries.
inline void write_rect(std::ostream& os, const RectMatrix& b) {
    os << b.rows() << " " << b.cols() << "\n";
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            os << (j ? " " : "") << format_value(b(i, j));
        }
        os << "\n";
    }
}

inline void write_rect(const std::string& path, const RectMatrix& b) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_rect(os, b);
}

inline RectMatrix read_rect(std::istream& is) {
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 1 || cols < 1) {
        throw std::runtime_error("rectangular matrix file: bad header");
    }
    RectMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!(is >> m(i, j))) {
                throw std::runtime_error("rectangular matrix file: truncated entries");
            }
        }
    }
    return m;
}

inline RectMatrix read_rect(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_rect(is);
}

/// Sample data: one whitespace-delimited vector per row, all rows the same
/// length. Returns an n x d matrix with one sample per row.
inline Eigen::MatrixXd read_samples(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error("sample file: inconsistent row lengths");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("sample file: no data rows");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.front().size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

inline Eigen::MatrixXd read_samples(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_samples(is);
}

}  // namespace io
}  // namespace matconc
