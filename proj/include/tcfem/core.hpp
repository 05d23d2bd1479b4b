#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tcfem
{

using Vec2   = Eigen::Vector2d;
using Mat2   = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using SpMat  = Eigen::SparseMatrix<double>;

/// Symmetric 2x2 tensor in Voigt form [s11, s22, s12]. Strains are stored
/// with engineering shear [e11, e22, 2 e12] so that stress.dot(strain) is the
/// full contraction s:e.
using Voigt        = Eigen::Vector3d;
using VoigtTangent = Eigen::Matrix3d;

class mesh_error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error
{
    std::size_t m_line;
    std::string m_msg;

  public:
    parse_error(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg)
      , m_line(line)
      , m_msg(msg)
    {
    }

    /// Message without the line prefix.
    const std::string&
    message() const noexcept
    {
        return m_msg;
    }

    std::size_t
    line() const noexcept
    {
        return m_line;
    }
};

class material_error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries only
/// depend on n and the thread count; callers write into disjoint slots and
/// reduce sequentially, so results do not depend on scheduling.
inline void
parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t, std::size_t)>& fn)
{
    if (threads <= 1 || n < 2 * threads)
    {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t)
    {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e)
            break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& th : pool)
        th.join();
}

/// Strain tensor (2x2) -> Voigt engineering strain.
inline Voigt
to_voigt_strain(const Mat2& e)
{
    return Voigt(e(0, 0), e(1, 1), e(0, 1) + e(1, 0));
}

inline Mat2
from_voigt_strain(const Voigt& v)
{
    Mat2 e;
    e << v(0), 0.5 * v(2), 0.5 * v(2), v(1);
    return e;
}

inline Mat2
from_voigt_stress(const Voigt& s)
{
    Mat2 m;
    m << s(0), s(2), s(2), s(1);
    return m;
}

inline Voigt
to_voigt_stress(const Mat2& s)
{
    return Voigt(s(0, 0), s(1, 1), 0.5 * (s(0, 1) + s(1, 0)));
}

} // namespace tcfem
