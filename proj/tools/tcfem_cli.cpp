// Command-line front end: mesh generation, single runs, convergence studies,
// hypothesis probes and the trace-inequality probe.

#include "tcfem/tcfem.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace tcfem;

namespace
{

enum Exit
{
    ok          = 0,
    usage       = 1,
    run_failure = 2,
    fail        = 3
};

RunSpec
load_spec(const std::string& path)
{
    return path.empty() ? RunSpec{} : parse_config_file(path);
}

std::string
out_dir(const std::string& flag, const RunSpec& spec)
{
    const std::string d = flag.empty() ? spec.output.dir : flag;
    fs::create_directories(d);
    return d;
}

int
cmd_mesh_gen(const std::string& config, const std::string& out, std::size_t refinements)
{
    auto spec = load_spec(config);
    spec.mesh.refinements += refinements;
    const auto mesh = build_mesh(spec.mesh);
    const auto rep  = validate_mesh(*mesh);
    if (!rep.ok())
    {
        std::cerr << "invalid mesh: " << rep.summary() << '\n';
        return run_failure;
    }
    if (out.empty() || out == "-")
        write_mesh(*mesh, std::cout);
    else
        write_mesh(*mesh, out);
    std::cerr << "nodes " << mesh->num_nodes() << " triangles " << mesh->num_triangles() << " h " << mesh->h() << '\n';
    return ok;
}

int
cmd_run(const std::string& config, const std::string& out, std::size_t snapshot_every)
{
    const auto  spec = load_spec(config);
    const auto  dir  = out_dir(out, spec);
    const auto  mesh = build_mesh(spec.mesh);
    const auto  prob = build_problem(spec, *mesh);
    const auto  every = snapshot_every ? snapshot_every : spec.output.snapshot_every;
    const Discretization d(mesh, prob.materials);
    const TimeGrid       grid(spec.time.final_time, spec.time.steps);
    const auto           init = project_initial_data(d, prob.initial);

    std::ofstream energy(fs::path(dir) / (spec.output.prefix + "_energy.csv"));
    energy << "n,t,energy\n";
    char buf[96];
    auto observe = [&](const SchemeState& s, const StepReport& r) {
        if (s.n > 0)
            log_step(std::cout, s.n, r);
        std::snprintf(buf, sizeof buf, "%zu,%.9e,%.9e\n", s.n, grid.t(s.n), discrete_energy(d, s));
        energy << buf;
        if (every && s.n % every == 0)
        {
            std::snprintf(buf, sizeof buf, "_%06zu.vtk", s.n);
            write_vtk(d, s, (fs::path(dir) / (spec.output.prefix + buf)).string());
        }
    };
    run_simulation(d, prob.materials, prob.data, init, grid, prob.solver, observe, false);
    return ok;
}

int
cmd_convergence(const std::string& config, const std::string& out, std::size_t levels, bool time_only)
{
    const auto   spec = load_spec(config);
    const auto   dir  = out_dir(out, spec);
    StudyOptions opt;
    opt.log = &std::cerr;
    ErrorTable table;
    EOCReport  eoc;
    if (time_only)
    {
        // fixed mesh of the finest measured level, k = T/25 ... T/200 against T/400
        auto r = time_study(spec, levels - 1, {25, 50, 100, 200}, 400, opt);
        table  = r.table;
        eoc    = r.eoc;
    }
    else
    {
        auto r = convergence_study(spec, levels, opt);
        table  = r.table;
        eoc    = r.eoc;
    }
    const auto    path = fs::path(dir) / (spec.output.prefix + (time_only ? "_time_convergence.csv" : "_convergence.csv"));
    std::ofstream csv(path);
    write_error_csv(csv, table, eoc);
    write_error_csv(std::cout, table, eoc);
    if (!csv)
        throw std::runtime_error("write failed for '" + path.string() + "'");
    return eoc.pass ? ok : fail;
}

int
cmd_check_hypotheses(const std::string& config, std::size_t samples)
{
    const auto spec = load_spec(config);
    const auto mat  = build_materials(spec.materials);
    const auto est  = probe_hypotheses(mat, samples);
    char       buf[160];
    for (const auto& c : est.items)
    {
        std::snprintf(buf, sizeof buf, "%-14s estimate %.9g declared %.9g (%s) %s", c.name.c_str(), c.estimate,
                      c.declared, c.is_lower_bound ? "lower bound" : "upper bound", c.violated ? "VIOLATED" : "ok");
        std::cout << buf << '\n';
    }
    return est.violated() ? run_failure : ok;
}

int
cmd_trace_probe(const std::string& config, double eps, std::size_t samples)
{
    const auto spec = load_spec(config);
    const auto res  = trace_probe(build_mesh(spec.mesh), eps, samples);
    char       buf[160];
    std::snprintf(buf, sizeof buf, "eps %.6g C %.9g samples %zu", res.eps, res.C, res.samples);
    std::cout << buf << "\nworst " << res.worst << '\n';
    return ok;
}

} // namespace

int
main(int argc, char** argv)
{
    CLI::App app{"Thermoviscoelastic frictional contact solver"};
    app.require_subcommand(1);

    std::string config, out;
    std::size_t levels = 3, snapshot_every = 0, samples = 10000, threads = 1, refine = 0;
    double      eps       = 0.5;
    bool        time_only = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "configuration file");
        sub->add_option("--threads", threads, "assembly threads")->check(CLI::PositiveNumber);
    };
    auto* mesh_gen = app.add_subcommand("mesh-gen", "write the configured mesh");
    add_common(mesh_gen);
    mesh_gen->add_option("--out", out, "output mesh file (default stdout)");
    mesh_gen->add_option("--levels", refine, "extra uniform refinements");

    auto* run = app.add_subcommand("run", "single simulation with energy log and snapshots");
    add_common(run);
    run->add_option("--out", out, "output directory");
    run->add_option("--snapshot-every", snapshot_every, "VTK snapshot interval in steps");

    auto* conv = app.add_subcommand("convergence", "self-convergence study with CSV and EOC report");
    add_common(conv);
    conv->add_option("--levels", levels, "measured refinement levels")->check(CLI::Range(2, 12));
    conv->add_option("--out", out, "output directory");
    conv->add_flag("--time-only", time_only, "k-halving on the finest measured mesh");

    auto* hyp = app.add_subcommand("check-hypotheses", "estimate the constants of the material laws");
    add_common(hyp);
    hyp->add_option("--samples", samples, "random samples per law")->check(CLI::Range(2, 100000000));

    auto* trace = app.add_subcommand("trace-probe", "estimate C(eps) of the eps-trace inequality");
    add_common(trace);
    trace->add_option("--eps", eps, "epsilon")->check(CLI::PositiveNumber);
    trace->add_option("--samples", samples, "sampled functions")->check(CLI::PositiveNumber);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << e.what() << "\n\n" << app.help();
        return usage;
    }

    set_assembly_threads(unsigned(threads));
    try
    {
        if (*mesh_gen)
            return cmd_mesh_gen(config, out, refine);
        if (*run)
            return cmd_run(config, out, snapshot_every);
        if (*conv)
            return cmd_convergence(config, out, levels, time_only);
        if (*hyp)
            return cmd_check_hypotheses(config, samples);
        if (*trace)
            return cmd_trace_probe(config, eps, samples);
    }
    catch (const parse_error& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return usage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return run_failure;
    }
    return usage;
}
