#pragma once

#include "tcfem/core.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace tcfem
{

namespace detail
{

/// Frobenius-orthonormal basis of symmetric 2x2 tensors, in Voigt
/// engineering-strain form.
inline std::array<Voigt, 3>
sym_basis_strain()
{
    return {Voigt(1, 0, 0), Voigt(0, 1, 0), Voigt(0, 0, std::sqrt(2.0))};
}

/// Components of a Voigt stress on the Frobenius-orthonormal basis.
inline Eigen::Vector3d
stress_coords(const Voigt& s)
{
    return {s(0), s(1), std::sqrt(2.0) * s(2)};
}

inline double
strain_frobenius(const Voigt& e)
{
    return std::sqrt(e(0) * e(0) + e(1) * e(1) + 0.5 * e(2) * e(2));
}

inline double
stress_frobenius(const Voigt& s)
{
    return std::sqrt(s(0) * s(0) + s(1) * s(1) + 2.0 * s(2) * s(2));
}

inline VoigtTangent
isotropic_tangent(double lambda, double mu)
{
    VoigtTangent d;
    d << lambda + 2 * mu, lambda, 0, lambda, lambda + 2 * mu, 0, 0, 0, mu;
    return d;
}

} // namespace detail

/// Viscosity law sigma_v = A(t, x, eps(w)).
class ViscosityLaw
{
  public:
    using StressFn  = std::function<Voigt(double, const Vec2&, const Voigt&)>;
    using TangentFn = std::function<VoigtTangent(double, const Vec2&, const Voigt&)>;

  private:
    StressFn  m_stress;
    TangentFn m_tangent;
    double    m_mono   = 0.0;
    double    m_lip    = 0.0;
    bool      m_linear = false;

  public:
    ViscosityLaw() : ViscosityLaw(linear_isotropic(1.0, 1.0)) {}

    static ViscosityLaw
    linear_isotropic(double lambda, double mu)
    {
        if (!(mu > 0.0) || !(lambda + mu > 0.0))
            throw material_error("linear viscosity requires mu > 0 and lambda + mu > 0");
        ViscosityLaw      law(nullptr, nullptr, 0, 0);
        const VoigtTangent d = detail::isotropic_tangent(lambda, mu);
        law.m_stress  = [d](double, const Vec2&, const Voigt& e) -> Voigt { return d * e; };
        law.m_tangent = [d](double, const Vec2&, const Voigt&) -> VoigtTangent { return d; };
        law.m_mono    = std::min(2 * mu, 2 * mu + 2 * lambda);
        law.m_lip     = std::max(2 * mu, 2 * mu + 2 * lambda);
        law.m_linear  = true;
        return law;
    }

    /// User law with declared monotonicity and Lipschitz constants.
    static ViscosityLaw
    custom(StressFn stress, TangentFn tangent, double mono, double lip)
    {
        if (!(mono > 0.0))
            throw material_error("viscosity monotonicity constant must be positive");
        return ViscosityLaw(std::move(stress), std::move(tangent), mono, lip);
    }

    Voigt
    stress(double t, const Vec2& x, const Voigt& e) const
    {
        return m_stress(t, x, e);
    }
    VoigtTangent
    tangent(double t, const Vec2& x, const Voigt& e) const
    {
        return m_tangent(t, x, e);
    }
    bool
    is_linear() const
    {
        return m_linear;
    }
    double
    declared_monotonicity() const
    {
        return m_mono;
    }
    double
    declared_lipschitz() const
    {
        return m_lip;
    }

  private:
    ViscosityLaw(StressFn s, TangentFn t, double mono, double lip)
      : m_stress(std::move(s))
      , m_tangent(std::move(t))
      , m_mono(mono)
      , m_lip(lip)
    {
    }
};

/// Linear elasticity tensor stored as a Voigt matrix acting on engineering
/// strains.
class ElasticTensor
{
    VoigtTangent m_d = VoigtTangent::Zero();

  public:
    ElasticTensor() = default;

    static ElasticTensor
    isotropic(double lambda, double mu)
    {
        ElasticTensor b;
        b.m_d = detail::isotropic_tangent(lambda, mu);
        return b;
    }

    /// Full tensor B_ijkl, index (i, j, k, l) at position 8i + 4j + 2k + l.
    /// Minor symmetries are assumed; symmetry and positivity are checked by
    /// is_admissible().
    static ElasticTensor
    general(const std::array<double, 16>& b)
    {
        auto          at = [&](int i, int j, int k, int l) { return b[8 * i + 4 * j + 2 * k + l]; };
        ElasticTensor t;
        const int     pairs[3][2] = {{0, 0}, {1, 1}, {0, 1}};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                t.m_d(r, c) = at(pairs[r][0], pairs[r][1], pairs[c][0], pairs[c][1]);
        return t;
    }

    const VoigtTangent&
    voigt() const
    {
        return m_d;
    }

    Voigt
    stress(const Voigt& e) const
    {
        return m_d * e;
    }

    /// Symmetry B s:t = s:B t and positivity B t:t >= 0 on random samples.
    bool
    is_admissible(std::size_t samples = 1000, unsigned seed = 7) const
    {
        std::mt19937_64                        rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double                           scale = std::max(1.0, m_d.cwiseAbs().maxCoeff());
        for (std::size_t i = 0; i < samples; ++i)
        {
            const Voigt s(u(rng), u(rng), u(rng)), t(u(rng), u(rng), u(rng));
            if (std::abs(stress(s).dot(t) - s.dot(stress(t))) > 1e-12 * scale)
                return false;
            if (stress(t).dot(t) < -1e-12 * scale)
                return false;
        }
        return true;
    }
};

class ExpansionTensor
{
    Mat2 m_c = Mat2::Zero();

  public:
    ExpansionTensor() = default;

    explicit ExpansionTensor(const Mat2& c)
      : m_c(c)
    {
        if (!c.allFinite() || c(0, 1) != c(1, 0))
            throw material_error("expansion tensor must be finite and symmetric");
    }

    static ExpansionTensor
    isotropic(double c)
    {
        return ExpansionTensor(c * Mat2::Identity());
    }

    const Mat2&
    matrix() const
    {
        return m_c;
    }
};

/// Heat flux law q = K(t, x, grad theta).
class ConductivityLaw
{
  public:
    using FluxFn    = std::function<Vec2(double, const Vec2&, const Vec2&)>;
    using TangentFn = std::function<Mat2(double, const Vec2&, const Vec2&)>;

  private:
    FluxFn    m_flux;
    TangentFn m_tangent;
    double    m_mono   = 0.0;
    double    m_lip    = 0.0;
    bool      m_linear = false;

  public:
    ConductivityLaw() : ConductivityLaw(linear_isotropic(1.0)) {}

  private:
    struct raw_tag
    {
    };
    explicit ConductivityLaw(raw_tag) {}

  public:

    static ConductivityLaw
    linear_isotropic(double k0)
    {
        if (!(k0 > 0.0))
            throw material_error("conductivity must be positive");
        ConductivityLaw law{raw_tag{}};
        law.m_flux    = [k0](double, const Vec2&, const Vec2& g) -> Vec2 { return k0 * g; };
        law.m_tangent = [k0](double, const Vec2&, const Vec2&) -> Mat2 { return k0 * Mat2::Identity(); };
        law.m_mono = law.m_lip = k0;
        law.m_linear           = true;
        return law;
    }

    static ConductivityLaw
    custom(FluxFn flux, TangentFn tangent, double mono, double lip)
    {
        if (!(mono > 0.0))
            throw material_error("conductivity monotonicity constant must be positive");
        ConductivityLaw law = linear_isotropic(1.0);
        law.m_flux          = std::move(flux);
        law.m_tangent       = std::move(tangent);
        law.m_mono          = mono;
        law.m_lip           = lip;
        law.m_linear        = false;
        return law;
    }

    Vec2
    flux(double t, const Vec2& x, const Vec2& g) const
    {
        return m_flux(t, x, g);
    }
    Mat2
    tangent(double t, const Vec2& x, const Vec2& g) const
    {
        return m_tangent(t, x, g);
    }
    bool
    is_linear() const
    {
        return m_linear;
    }
    double
    declared_monotonicity() const
    {
        return m_mono;
    }
    double
    declared_lipschitz() const
    {
        return m_lip;
    }
};

/// Friction potential through the slope psi'(s) of its radial density: the
/// tangential stress magnitude as a function of slip rate s. The built-in law
/// psi'(s) = (a - b) exp(-alpha s) + b decreases from a to b when a > b.
class FrictionPotential
{
  public:
    using SlopeFn = std::function<double(double)>;

  private:
    double  m_a = 2.0, m_b = 1.0, m_alpha = 10.0;
    double  m_rho = 1e-6;
    SlopeFn m_psi1, m_psi2;
    double  m_cj = 0.0, m_mj = 0.0;

  public:
    FrictionPotential() : FrictionPotential(exponential(2.0, 1.0, 10.0)) {}

    static FrictionPotential
    exponential(double a, double b, double alpha, double rho_reg = 1e-6)
    {
        if (!(a >= 0.0) || !(b >= 0.0) || !(alpha >= 0.0))
            throw material_error("friction parameters a, b, alpha must be nonnegative");
        if (!(rho_reg > 0.0))
            throw material_error("friction regularization radius must be positive");
        FrictionPotential p(nullptr, nullptr, rho_reg, 0, 0);
        p.m_a     = a;
        p.m_b     = b;
        p.m_alpha = alpha;
        p.m_psi1  = [a, b, alpha](double s) { return (a - b) * std::exp(-alpha * s) + b; };
        p.m_psi2  = [a, b, alpha](double s) { return -alpha * (a - b) * std::exp(-alpha * s); };
        p.m_cj    = std::max(a, b);
        p.m_mj    = alpha * std::max(a - b, 0.0);
        return p;
    }

    static FrictionPotential
    custom(SlopeFn psi1, SlopeFn psi2, double rho_reg, double cj, double mj)
    {
        if (!(rho_reg > 0.0))
            throw material_error("friction regularization radius must be positive");
        return FrictionPotential(std::move(psi1), std::move(psi2), rho_reg, cj, mj);
    }

    double
    slope(double s) const
    {
        return m_psi1(s);
    }
    double
    slope_derivative(double s) const
    {
        return m_psi2(s);
    }
    double
    rho_reg() const
    {
        return m_rho;
    }
    double
    a() const
    {
        return m_a;
    }
    double
    b() const
    {
        return m_b;
    }
    double
    alpha() const
    {
        return m_alpha;
    }
    double
    declared_bound() const
    {
        return m_cj;
    }
    double
    declared_relaxed_monotonicity() const
    {
        return m_mj;
    }

  private:
    FrictionPotential(SlopeFn p1, SlopeFn p2, double rho, double cj, double mj)
      : m_rho(rho)
      , m_psi1(std::move(p1))
      , m_psi2(std::move(p2))
      , m_cj(cj)
      , m_mj(mj)
    {
    }
};

/// Regularized single-valued selection of -d j(w_tau):
///   xi = -psi'(|w|) w / max(|w|, rho_reg).
inline Vec2
friction_traction(const FrictionPotential& p, const Vec2& w_tau)
{
    const double s = w_tau.norm();
    if (s == 0.0)
        return Vec2::Zero();
    return -p.slope(s) * w_tau / std::max(s, p.rho_reg());
}

inline Mat2
friction_traction_derivative(const FrictionPotential& p, const Vec2& w_tau)
{
    const double s   = w_tau.norm();
    const double rho = p.rho_reg();
    if (s == 0.0)
        return -(p.slope(0.0) / rho) * Mat2::Identity();
    const Vec2 n = w_tau / s;
    if (s <= rho)
        return -(p.slope(s) / rho) * Mat2::Identity() - (p.slope_derivative(s) * s / rho) * (n * n.transpose());
    const Mat2 proj = Mat2::Identity() - n * n.transpose();
    return -p.slope_derivative(s) * (n * n.transpose()) - (p.slope(s) / s) * proj;
}

/// Boundary heat exchange r(theta).
class HeatExchange
{
  public:
    using Fn = std::function<double(double)>;

  private:
    Fn     m_r, m_dr;
    double m_lip    = 0.0;
    bool   m_linear = false;

  public:
    HeatExchange() : HeatExchange(linear(0.5, 0.0)) {}

  private:
    struct raw_tag
    {
    };
    explicit HeatExchange(raw_tag) {}

  public:

    /// r(theta) = k_e (theta_R - theta).
    static HeatExchange
    linear(double k_e, double theta_ref)
    {
        if (!(k_e >= 0.0))
            throw material_error("heat exchange coefficient must be nonnegative");
        HeatExchange r{raw_tag{}};
        r.m_r      = [k_e, theta_ref](double th) { return k_e * (theta_ref - th); };
        r.m_dr     = [k_e](double) { return -k_e; };
        r.m_lip    = k_e;
        r.m_linear = true;
        return r;
    }

    static HeatExchange
    custom(Fn r, Fn dr, double lip)
    {
        HeatExchange e{raw_tag{}};
        e.m_r      = std::move(r);
        e.m_dr     = std::move(dr);
        e.m_lip    = lip;
        e.m_linear = false;
        return e;
    }

    double
    operator()(double th) const
    {
        return m_r(th);
    }
    double
    derivative(double th) const
    {
        return m_dr(th);
    }
    double
    declared_lipschitz() const
    {
        return m_lip;
    }
    bool
    is_linear() const
    {
        return m_linear;
    }
};

/// Frictional heat source h(s) on the contact boundary, s = |w_tau|.
class FrictionalHeat
{
  public:
    using Fn = std::function<double(double)>;

  private:
    Fn     m_h, m_dh;
    double m_lip = 0.0;

  public:
    FrictionalHeat() : FrictionalHeat(capped_linear(1.0, 10.0)) {}

  private:
    struct raw_tag
    {
    };
    explicit FrictionalHeat(raw_tag) {}

  public:

    /// h(s) = k_h min(s, s_cap).
    static FrictionalHeat
    capped_linear(double k_h, double s_cap)
    {
        if (!(k_h >= 0.0) || !(s_cap > 0.0))
            throw material_error("frictional heat requires k_h >= 0 and s_cap > 0");
        FrictionalHeat h{raw_tag{}};
        h.m_h   = [k_h, s_cap](double s) { return k_h * std::min(s, s_cap); };
        h.m_dh  = [k_h, s_cap](double s) { return s < s_cap ? k_h : 0.0; };
        h.m_lip = k_h;
        return h;
    }

    static FrictionalHeat
    custom(Fn h, Fn dh, double lip)
    {
        FrictionalHeat f{raw_tag{}};
        f.m_h   = std::move(h);
        f.m_dh  = std::move(dh);
        f.m_lip = lip;
        return f;
    }

    double
    operator()(double s) const
    {
        return m_h(s);
    }
    double
    derivative(double s) const
    {
        return m_dh(s);
    }
    double
    declared_lipschitz() const
    {
        return m_lip;
    }
};

struct MaterialSet
{
    ElasticTensor     elastic      = ElasticTensor::isotropic(4.0, 4.0);
    ViscosityLaw      viscosity    = ViscosityLaw::linear_isotropic(1.0, 1.0);
    ExpansionTensor   expansion    = ExpansionTensor::isotropic(0.5);
    ConductivityLaw   conductivity = ConductivityLaw::linear_isotropic(1.0);
    FrictionPotential friction     = FrictionPotential::exponential(2.0, 1.0, 10.0);
    HeatExchange      heat_exchange = HeatExchange::linear(0.5, 0.0);
    FrictionalHeat    frictional_heat = FrictionalHeat::capped_linear(1.0, 10.0);
    /// When false, both the friction traction and the frictional heat vanish.
    bool friction_enabled = true;

    static MaterialSet
    benchmark()
    {
        return {};
    }
};

// ---------------------------------------------------------------------------
// Hypothesis probes

struct ConstantEstimate
{
    std::string name;
    double      estimate = 0.0;
    double      declared = 0.0;
    /// Lower bounds (monotonicity) must not exceed the estimate; upper bounds
    /// (Lipschitz, growth, relaxed monotonicity) must not be exceeded by it.
    bool is_lower_bound = false;
    bool violated       = false;
};

struct ConstantEstimates
{
    std::vector<ConstantEstimate> items;

    bool
    violated() const
    {
        return std::any_of(items.begin(), items.end(), [](const auto& c) { return c.violated; });
    }

    const ConstantEstimate&
    get(const std::string& name) const
    {
        for (const auto& c : items)
            if (c.name == name)
                return c;
        throw std::out_of_range("no constant named " + name);
    }

    void
    add(std::string name, double estimate, double declared, bool lower)
    {
        const double tol = 1e-8 * std::max(1.0, std::abs(declared));
        const bool   bad = lower ? estimate < declared - tol : estimate > declared + tol;
        items.push_back({std::move(name), estimate, declared, lower, bad});
    }
};

namespace detail
{

inline double
log_uniform(std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

inline Voigt
random_strain(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return log_uniform(rng, 1e-3, 10.0) * Voigt(u(rng), u(rng), u(rng));
}

} // namespace detail

/// Random-pair estimates of the monotonicity and Lipschitz constants. Pair
/// quotients are complemented by the extreme eigenvalues of the symmetrized
/// central-difference tangent at each sample, which is what bounds the pair
/// quotients for smooth laws.
inline ConstantEstimates
probe_hypotheses(const ViscosityLaw& law, std::size_t samples, unsigned seed = 1, double t = 0.0)
{
    if (samples < 2)
        throw std::invalid_argument("probe_hypotheses needs at least two samples");
    std::mt19937_64 rng(seed);
    const Vec2      x(0.5, 0.5);
    double          mono = std::numeric_limits<double>::infinity(), lip = 0.0;
    const auto      basis = detail::sym_basis_strain();
    for (std::size_t i = 0; i < samples; ++i)
    {
        const Voigt  e1 = detail::random_strain(rng), e2 = detail::random_strain(rng);
        const Voigt  d = e1 - e2;
        const Voigt  ds = law.stress(t, x, e1) - law.stress(t, x, e2);
        const double n2 = std::pow(detail::strain_frobenius(d), 2);
        if (n2 > 0.0)
        {
            mono = std::min(mono, ds.dot(d) / n2);
            lip  = std::max(lip, detail::stress_frobenius(ds) / std::sqrt(n2));
        }
        const double   step = 1e-4 * std::max(1.0, detail::strain_frobenius(e1));
        Eigen::Matrix3d tan;
        for (int j = 0; j < 3; ++j)
            tan.col(j) = detail::stress_coords(law.stress(t, x, e1 + step * basis[j]) -
                                               law.stress(t, x, e1 - step * basis[j])) /
                         (2 * step);
        const Eigen::Matrix3d sym = 0.5 * (tan + tan.transpose());
        mono = std::min(mono, Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(sym).eigenvalues().minCoeff());
        lip  = std::max(lip, Eigen::JacobiSVD<Eigen::Matrix3d>(tan).singularValues()(0));
    }
    ConstantEstimates out;
    out.add("m_A", mono, law.declared_monotonicity(), true);
    out.add("L_A", lip, law.declared_lipschitz(), false);
    return out;
}

inline ConstantEstimates
probe_hypotheses(const ConductivityLaw& law, std::size_t samples, unsigned seed = 1, double t = 0.0)
{
    if (samples < 2)
        throw std::invalid_argument("probe_hypotheses needs at least two samples");
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Vec2                             x(0.5, 0.5);
    double                                 mono = std::numeric_limits<double>::infinity(), lip = 0.0;
    for (std::size_t i = 0; i < samples; ++i)
    {
        const Vec2   g1 = detail::log_uniform(rng, 1e-3, 10.0) * Vec2(u(rng), u(rng));
        const Vec2   g2 = detail::log_uniform(rng, 1e-3, 10.0) * Vec2(u(rng), u(rng));
        const Vec2   d  = g1 - g2;
        const Vec2   dq = law.flux(t, x, g1) - law.flux(t, x, g2);
        const double n2 = d.squaredNorm();
        if (n2 > 0.0)
        {
            mono = std::min(mono, dq.dot(d) / n2);
            lip  = std::max(lip, dq.norm() / std::sqrt(n2));
        }
        const double step = 1e-4 * std::max(1.0, g1.norm());
        Mat2         tan;
        for (int j = 0; j < 2; ++j)
        {
            const Vec2 e = Vec2::Unit(j) * step;
            tan.col(j)   = (law.flux(t, x, g1 + e) - law.flux(t, x, g1 - e)) / (2 * step);
        }
        const Mat2 sym = 0.5 * (tan + tan.transpose());
        mono           = std::min(mono, Eigen::SelfAdjointEigenSolver<Mat2>(sym).eigenvalues().minCoeff());
        lip            = std::max(lip, Eigen::JacobiSVD<Mat2>(tan).singularValues()(0));
    }
    ConstantEstimates out;
    out.add("m_K", mono, law.declared_monotonicity(), true);
    out.add("L_K", lip, law.declared_lipschitz(), false);
    return out;
}

/// Growth bound c_j and relaxed-monotonicity constant m_j of the subgradient
/// selection zeta = -friction_traction(xi).
inline ConstantEstimates
probe_hypotheses(const FrictionPotential& p, std::size_t samples, unsigned seed = 1)
{
    if (samples < 2)
        throw std::invalid_argument("probe_hypotheses needs at least two samples");
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    auto                                   sample = [&] {
        const double r  = detail::log_uniform(rng, 1e-3 * p.rho_reg(), 10.0);
        const double th = ang(rng);
        return Vec2(r * std::cos(th), r * std::sin(th));
    };
    double bound = 0.0, relaxed = 0.0;
    for (std::size_t i = 0; i < samples; ++i)
    {
        Vec2 x1 = sample(), x2 = sample();
        // half of the pairs are radially aligned, where the nonmonotone
        // decrease of psi' is visible
        if (i % 2 == 0)
            x2 = x1.normalized() * x2.norm();
        const Vec2 z1 = -friction_traction(p, x1), z2 = -friction_traction(p, x2);
        bound         = std::max({bound, z1.norm(), z2.norm()});
        const double n2 = (x1 - x2).squaredNorm();
        if (n2 > 0.0)
            relaxed = std::max(relaxed, -(z1 - z2).dot(x1 - x2) / n2);
    }
    ConstantEstimates out;
    out.add("c_j", bound, p.declared_bound(), false);
    out.add("m_j", relaxed, p.declared_relaxed_monotonicity(), false);
    return out;
}

inline ConstantEstimates
probe_hypotheses(const HeatExchange& r, std::size_t samples, unsigned seed = 1)
{
    if (samples < 2)
        throw std::invalid_argument("probe_hypotheses needs at least two samples");
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double                                 lip = 0.0;
    for (std::size_t i = 0; i < samples; ++i)
    {
        const double a = u(rng), b = u(rng);
        if (a != b)
            lip = std::max(lip, std::abs(r(a) - r(b)) / std::abs(a - b));
    }
    ConstantEstimates out;
    out.add("L_r", lip, r.declared_lipschitz(), false);
    return out;
}

inline ConstantEstimates
probe_hypotheses(const FrictionalHeat& h, std::size_t samples, unsigned seed = 1)
{
    if (samples < 2)
        throw std::invalid_argument("probe_hypotheses needs at least two samples");
    std::mt19937_64                        rng(seed);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    double                                 lip = 0.0, min_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i)
    {
        const double a = u(rng), b = u(rng);
        min_value      = std::min({min_value, h(a), h(b)});
        if (a != b)
            lip = std::max(lip, std::abs(h(a) - h(b)) / std::abs(a - b));
    }
    ConstantEstimates out;
    out.add("L_h", lip, h.declared_lipschitz(), false);
    out.add("h_min", min_value, 0.0, true);
    return out;
}

/// All probes of a material set, concatenated.
inline ConstantEstimates
probe_hypotheses(const MaterialSet& mat, std::size_t samples, unsigned seed = 1)
{
    ConstantEstimates all;
    auto              append = [&](const ConstantEstimates& e) {
        all.items.insert(all.items.end(), e.items.begin(), e.items.end());
    };
    append(probe_hypotheses(mat.viscosity, samples, seed));
    append(probe_hypotheses(mat.conductivity, samples, seed + 1));
    append(probe_hypotheses(mat.friction, samples, seed + 2));
    append(probe_hypotheses(mat.heat_exchange, samples, seed + 3));
    append(probe_hypotheses(mat.frictional_heat, samples, seed + 4));
    all.add("B_admissible", mat.elastic.is_admissible() ? 1.0 : 0.0, 1.0, true);
    return all;
}

} // namespace tcfem
