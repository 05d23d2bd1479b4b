#pragma once

#include "tcfem/config.hpp"

#include <cstdio>
#include <limits>
#include <ostream>

namespace tcfem
{

/// Errors of one level against the reference, in fine-space norms at the
/// coarse time points.
struct ErrorRow
{
    std::size_t level    = 0;
    double      h        = 0.0;
    double      k        = 0.0;
    double      errU     = 0.0; ///< max_n |u_n - u_n^ref|_E
    double      errW     = 0.0; ///< max_n |w_n - w_n^ref|_H
    double      errTheta = 0.0; ///< max_n |theta_n - theta_n^ref|_{L2}
    double      sumW     = 0.0; ///< k sum_n |w_n - w_n^ref|_E^2
    double      sumTheta = 0.0; ///< k sum_n |theta_n - theta_n^ref|_V^2
};

struct ErrorTable
{
    std::vector<ErrorRow> rows;
};

inline constexpr std::array<const char*, 5> quantity_names{"errU", "errW", "errTheta", "sumW", "sumTheta"};

inline std::array<double, 5>
quantities(const ErrorRow& r)
{
    return {r.errU, r.errW, r.errTheta, r.sumW, r.sumTheta};
}

/// Rates log2(e_l / e_{l+1}); NaN marks an undefined rate (an error at or
/// below `floor`).
struct EOCReport
{
    std::vector<std::array<double, 5>> rates; ///< one entry per consecutive pair
    bool                               pass      = false;
    bool                               undefined = false;
    double                             min_rate  = std::numeric_limits<double>::quiet_NaN();
    double                             threshold = 0.8;
};

inline EOCReport
compute_eoc(const ErrorTable& t, double threshold = 0.8, double floor = 1e-13)
{
    EOCReport rep;
    rep.threshold = threshold;
    for (std::size_t l = 0; l + 1 < t.rows.size(); ++l)
    {
        const auto            a = quantities(t.rows[l]), b = quantities(t.rows[l + 1]);
        std::array<double, 5> r{};
        for (std::size_t q = 0; q < 5; ++q)
            r[q] = (a[q] > floor && b[q] > floor) ? std::log2(a[q] / b[q]) : std::numeric_limits<double>::quiet_NaN();
        rep.rates.push_back(r);
    }
    // verdict on errU, errW, errTheta over the last two pairs
    const std::size_t np = rep.rates.size();
    if (np == 0)
    {
        rep.undefined = true;
        return rep;
    }
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t p = np >= 2 ? np - 2 : 0; p < np; ++p)
        for (std::size_t q = 0; q < 3; ++q)
        {
            if (std::isnan(rep.rates[p][q]))
                rep.undefined = true;
            else
                mn = std::min(mn, rep.rates[p][q]);
        }
    rep.min_rate = rep.undefined ? std::numeric_limits<double>::quiet_NaN() : mn;
    rep.pass     = !rep.undefined && mn >= threshold;
    return rep;
}

/// Streams reference states and accumulates the errors of one stored coarse
/// trajectory; avoids keeping the reference trajectory in memory.
class ErrorAccumulator
{
    const Discretization*           m_coarse;
    const std::vector<SchemeState>* m_states;
    const Discretization*           m_fine;
    std::size_t                     m_ratio;
    double                          m_k;
    ErrorRow                        m_row;

  public:
    ErrorAccumulator(const Discretization& coarse, const std::vector<SchemeState>& states, const TimeGrid& cg,
                     const Discretization& fine, const TimeGrid& fg)
      : m_coarse(&coarse)
      , m_states(&states)
      , m_fine(&fine)
      , m_ratio(0)
      , m_k(cg.k())
    {
        if (std::abs(cg.final_time() - fg.final_time()) > 1e-12 * cg.final_time())
            throw std::invalid_argument("compute_errors: time grids end at different times");
        if (fg.steps() % cg.steps() != 0)
            throw std::invalid_argument("compute_errors: fine time grid does not refine the coarse one");
        if (states.size() != cg.steps() + 1)
            throw std::invalid_argument("compute_errors: coarse trajectory must hold states 0..N");
        detail::refinement_chain(coarse.mesh(), fine.mesh()); // throws when not nested
        m_ratio   = fg.steps() / cg.steps();
        m_row.h   = coarse.mesh().h();
        m_row.k   = cg.k();
    }

    void
    observe(const SchemeState& ref)
    {
        if (ref.n == 0 || ref.n % m_ratio != 0)
            return;
        const auto& c  = (*m_states)[ref.n / m_ratio];
        const auto& nf = m_fine->norms();
        const Vector du = prolongate(m_coarse->vector(), c.u, m_fine->vector()) - ref.u;
        const Vector dw = prolongate(m_coarse->vector(), c.w, m_fine->vector()) - ref.w;
        const Vector dt = prolongate(m_coarse->scalar(), c.theta, m_fine->scalar()) - ref.theta;
        m_row.errU      = std::max(m_row.errU, nf.e_vector(du));
        m_row.errW      = std::max(m_row.errW, nf.l2_vector(dw));
        m_row.errTheta  = std::max(m_row.errTheta, nf.l2_scalar(dt));
        const double ew = nf.e_vector(dw), et = nf.h1_scalar(dt);
        m_row.sumW += m_k * ew * ew;
        m_row.sumTheta += m_k * et * et;
    }

    const ErrorRow&
    row() const
    {
        return m_row;
    }
};

/// Errors of a coarse trajectory against a reference on a nested mesh and a
/// refined time grid (max over n = 1..N; sums use the coarse k).
inline ErrorRow
compute_errors(const Discretization& coarse, const std::vector<SchemeState>& coarse_states, const TimeGrid& cg,
               const Discretization& fine, const std::vector<SchemeState>& fine_states, const TimeGrid& fg)
{
    ErrorAccumulator acc(coarse, coarse_states, cg, fine, fg);
    if (fine_states.size() != fg.steps() + 1)
        throw std::invalid_argument("compute_errors: reference trajectory must hold states 0..N");
    for (const auto& s : fine_states)
        acc.observe(s);
    return acc.row();
}

/// One structured log line per step.
inline void
log_step(std::ostream& os, std::size_t n, const StepReport& r)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "step %zu iters %zu residual %.3e damping %.3g%s", n, r.iterations, r.residual,
                  r.damping, r.fallback ? " fallback" : "");
    os << buf << '\n';
}

struct StudyOptions
{
    double        threshold = 0.8;
    std::ostream* log       = nullptr; ///< progress lines, if set
};

struct ConvergenceResult
{
    ErrorTable  table;
    EOCReport   eoc;
    std::size_t reference_steps = 0;
    double      reference_h     = 0.0;
    double      self_check      = 0.0; ///< errors of the finest level against itself
};

/// Step count of level 0 for the coupling k = c h.
inline std::size_t
coupled_steps(double final_time, double coupling, double h0)
{
    if (!(coupling > 0.0))
        throw std::invalid_argument("time coupling must be positive");
    return std::size_t(std::ceil(final_time / (coupling * h0) - 1e-9));
}

/// Self-convergence study: levels 0..L-1 of nested uniform refinement with
/// N_l = N_0 2^l (N_0 from k = c h_0), against a reference one level deeper
/// with k_ref = k_{L-1} / 2.
inline ConvergenceResult
convergence_study(const RunSpec& spec, std::size_t levels, const StudyOptions& opt = {})
{
    if (levels < 2)
        throw std::invalid_argument("convergence study needs at least 2 levels");
    std::vector<std::shared_ptr<const Mesh>> meshes{build_mesh(spec.mesh)};
    for (std::size_t l = 0; l < levels; ++l)
        meshes.push_back(refine_uniform(meshes.back()));

    const Problem     prob = build_problem(spec, *meshes[0]);
    const std::size_t N0   = coupled_steps(spec.time.final_time, spec.time.coupling, meshes[0]->h());

    std::vector<std::unique_ptr<Discretization>> disc;
    std::vector<TimeGrid>                        grids;
    std::vector<std::vector<SchemeState>>        states;
    for (std::size_t l = 0; l <= levels; ++l)
    {
        disc.push_back(std::make_unique<Discretization>(meshes[l], prob.materials));
        grids.emplace_back(spec.time.final_time, N0 << l);
    }
    for (std::size_t l = 0; l < levels; ++l)
    {
        if (opt.log)
            *opt.log << "level " << l << " h " << meshes[l]->h() << " steps " << grids[l].steps() << " dofs "
                     << disc[l]->nw() + disc[l]->ntheta() << std::endl;
        try
        {
            const auto init = project_initial_data(*disc[l], prob.initial);
            states.push_back(
                run_simulation(*disc[l], prob.materials, prob.data, init, grids[l], prob.solver).states);
        }
        catch (const step_failure& e)
        {
            throw step_failure(e.step(), e.report(), "level " + std::to_string(l) + ": " + e.what());
        }
    }

    const std::size_t             L = levels;
    std::vector<ErrorAccumulator> acc;
    for (std::size_t l = 0; l < levels; ++l)
        acc.emplace_back(*disc[l], states[l], grids[l], *disc[L], grids[L]);
    if (opt.log)
        *opt.log << "reference h " << meshes[L]->h() << " steps " << grids[L].steps() << " dofs "
                 << disc[L]->nw() + disc[L]->ntheta() << std::endl;
    try
    {
        const auto init = project_initial_data(*disc[L], prob.initial);
        run_simulation(
            *disc[L], prob.materials, prob.data, init, grids[L], prob.solver,
            [&](const SchemeState& s, const StepReport&) {
                for (auto& a : acc)
                    a.observe(s);
            },
            false);
    }
    catch (const step_failure& e)
    {
        throw step_failure(e.step(), e.report(), "reference level: " + std::string(e.what()));
    }

    ConvergenceResult res;
    for (std::size_t l = 0; l < levels; ++l)
    {
        res.table.rows.push_back(acc[l].row());
        res.table.rows.back().level = l;
    }
    res.eoc             = compute_eoc(res.table, opt.threshold);
    res.reference_steps = grids[L].steps();
    res.reference_h     = meshes[L]->h();

    const auto& fin  = states[levels - 1];
    const auto  self = compute_errors(*disc[levels - 1], fin, grids[levels - 1], *disc[levels - 1], fin, grids[levels - 1]);
    const auto  q    = quantities(self);
    res.self_check   = *std::max_element(q.begin(), q.end());
    if (res.self_check != 0.0)
        throw std::logic_error("self-check failed: a trajectory differs from itself after prolongation");
    return res;
}

struct TimeStudyResult
{
    ErrorTable  table;      ///< against the extrapolated reference
    ErrorTable  plain;      ///< against the finest run directly
    EOCReport   eoc;        ///< rates of `table`
    EOCReport   plain_eoc;
    std::size_t reference_steps = 0;
};

/// Time-only study on one fixed mesh. The reference is the Richardson
/// extrapolation 2 x_{N_ref} - x_{N_ref/2}, which removes the leading O(k)
/// term of the finest run; the plain comparison is reported alongside.
inline TimeStudyResult
time_study(const RunSpec& spec, std::size_t refinements, const std::vector<std::size_t>& steps, std::size_t ref_steps,
           const StudyOptions& opt = {})
{
    if (steps.empty() || ref_steps % 2 != 0)
        throw std::invalid_argument("time study needs step counts and an even reference count");
    auto mesh = refine_times(build_mesh(spec.mesh), refinements);
    const Problem        prob = build_problem(spec, *mesh);
    const Discretization d(mesh, prob.materials);
    const auto           init = project_initial_data(d, prob.initial);
    auto                 run  = [&](std::size_t n) {
        if (opt.log)
            *opt.log << "time level steps " << n << std::endl;
        return run_simulation(d, prob.materials, prob.data, init, TimeGrid(spec.time.final_time, n), prob.solver).states;
    };
    const auto fine = run(ref_steps);
    const auto half = run(ref_steps / 2);
    std::vector<SchemeState> extrap(fine.size());
    for (std::size_t n = 0; n < fine.size(); ++n)
    {
        extrap[n].n = n;
        if (n % 2 == 0)
        {
            const auto& a = fine[n];
            const auto& b = half[n / 2];
            extrap[n]     = {n, 2.0 * a.w - b.w, 2.0 * a.theta - b.theta, 2.0 * a.u - b.u};
        }
        else
            extrap[n] = fine[n]; // odd times are never compared
    }
    TimeStudyResult  res;
    const TimeGrid   fg(spec.time.final_time, ref_steps);
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
        const std::size_t n = steps[i];
        if ((ref_steps / 2) % n != 0)
            throw std::invalid_argument("time study step counts must divide N_ref / 2");
        const TimeGrid cg(spec.time.final_time, n);
        const auto     st = n == ref_steps / 2 ? half : run(n);
        auto           r  = compute_errors(d, st, cg, d, extrap, fg);
        auto           p  = compute_errors(d, st, cg, d, fine, fg);
        r.level = p.level = i;
        res.table.rows.push_back(r);
        res.plain.rows.push_back(p);
    }
    res.eoc             = compute_eoc(res.table, opt.threshold);
    res.plain_eoc       = compute_eoc(res.plain, opt.threshold);
    res.reference_steps = ref_steps;
    return res;
}

/// CSV table followed by the EOC report as comment lines.
inline void
write_error_csv(std::ostream& os, const ErrorTable& t, const EOCReport& eoc)
{
    char buf[256];
    os << "level,h,k,errU_E,errW_H,errTheta_L2,sumW_E2,sumTheta_V2\n";
    for (const auto& r : t.rows)
    {
        std::snprintf(buf, sizeof buf, "%zu,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e,%.9e\n", r.level, r.h, r.k, r.errU, r.errW,
                      r.errTheta, r.sumW, r.sumTheta);
        os << buf;
    }
    for (std::size_t q = 0; q < 5; ++q)
        for (std::size_t p = 0; p < eoc.rates.size(); ++p)
        {
            if (std::isnan(eoc.rates[p][q]))
                std::snprintf(buf, sizeof buf, "# rate_%s level %zu->%zu = undefined\n", quantity_names[q], p, p + 1);
            else
                std::snprintf(buf, sizeof buf, "# rate_%s level %zu->%zu = %.4f\n", quantity_names[q], p, p + 1,
                              eoc.rates[p][q]);
            os << buf;
        }
    if (eoc.undefined)
        os << "# verdict FAIL (rate undefined)\n";
    else
    {
        std::snprintf(buf, sizeof buf, "# verdict %s (min rate %.4f, threshold %.2f)\n", eoc.pass ? "PASS" : "FAIL",
                      eoc.min_rate, eoc.threshold);
        os << buf;
    }
}

} // namespace tcfem
