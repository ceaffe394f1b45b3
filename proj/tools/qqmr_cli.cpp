// Batch driver: builds one problem, runs the requested solvers on it and
// writes CSV histories and summaries into the output directory.
//
// Exit codes: 0 when every run completed (a solver breakdown is recorded in
// summary.csv and still counts as completed), 2 on configuration errors,
// 3 on I/O errors.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qqmr/qqmr.hpp"

namespace fs = std::filesystem;
using namespace qqmr;

namespace
{

constexpr int exit_config = 2;
constexpr int exit_io = 3;

const std::vector<std::string> known_solvers = {"qbicg", "qqmr3", "qqmr2", "pqqmr3", "pqqmr2"};

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<std::string> split(const std::string &s, char sep = ',')
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
  {
    out.push_back(item);
  }
  return out;
}

double to_number(const std::string &s, const std::string &what)
{
  std::size_t pos = 0;
  double v = 0;
  try
  {
    v = std::stod(s, &pos);
  }
  catch (const std::exception &)
  {
    pos = 0;
  }
  if (pos == 0 || pos != s.size())
  {
    throw usage_error(what + ": '" + s + "' is not a number");
  }
  return v;
}

std::size_t to_count(const std::string &s, const std::string &what)
{
  const double v = to_number(s, what);
  if (v < 0 || v != std::floor(v))
  {
    throw usage_error(what + ": '" + s + "' is not a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> numbers(const std::string &s, std::size_t count, const std::string &what)
{
  const auto parts = split(s);
  if (parts.size() != count)
  {
    throw usage_error(what + ": expected " + std::to_string(count) + " comma-separated values");
  }
  std::vector<double> out;
  for (const auto &p : parts)
  {
    out.push_back(to_number(p, what));
  }
  return out;
}

struct Config
{
  std::string problem = "identity";
  std::string mtx;
  std::string coeffs = "1,2,-1.5,0.5";
  std::string chen = "1,1e-3,50,50,0.01";
  std::string blur;
  std::string solvers = "qqmr2";
  double tol = 1e-7;
  std::size_t max_iter = 5000;
  std::uint64_t seed = 20240601;
  std::string out = ".";
  bool history = false;
  bool gnuplot = false;
  std::size_t n = 100;
  double convection = 100.0;
};

struct Built
{
  Problem problem;
  // deblurring only
  std::optional<ColorImage> image;
  std::string image_ext;
};

Built build_problem(const Config &cfg)
{
  Built out;
  if (cfg.problem == "identity")
  {
    out.problem = identity_problem(cfg.n, cfg.seed);
  }
  else if (cfg.problem == "convdiff")
  {
    const auto c = numbers(cfg.coeffs, 4, "--coeffs");
    out.problem = convection_diffusion_problem(cfg.n, cfg.convection, cfg.seed, Quaternion(c[0], c[1], c[2], c[3]));
  }
  else if (cfg.problem == "mtx")
  {
    if (cfg.mtx.empty())
    {
      throw usage_error("--problem mtx needs --mtx <file>");
    }
    const auto c = numbers(cfg.coeffs, 4, "--coeffs");
    out.problem = gen_channel_scaled(read_matrix_market(fs::path(cfg.mtx)), cfg.seed, Quaternion(c[0], c[1], c[2], c[3]),
                               fs::path(cfg.mtx).stem().string());
  }
  else if (cfg.problem == "chen")
  {
    const auto v = numbers(cfg.chen, 5, "--chen");
    const std::size_t p = to_count(split(cfg.chen)[2], "--chen p");
    const std::size_t q = to_count(split(cfg.chen)[3], "--chen q");
    if (p != q)
    {
      throw usage_error("--chen: the solvers need a square system, so p must equal q");
    }
    out.problem = build_filter_system(chen_rk4(v[0], v[1]), p, q, v[4], cfg.seed);
  }
  else if (cfg.problem == "blur")
  {
    const auto parts = split(cfg.blur);
    if (parts.size() != 5)
    {
      throw usage_error("--blur: expected img,mode,sigma,r,s");
    }
    const std::string &mode = parts[1];
    const double sigma = to_number(parts[2], "--blur sigma");
    const std::size_t r = to_count(parts[3], "--blur r");
    const std::size_t s = to_count(parts[4], "--blur s");
    ColorImage img = read_image(parts[0]);
    std::shared_ptr<const QLinearOperator> op;
    if (mode == "single")
    {
      op = build_blur_single(img.n, sigma, r, s);
    }
    else if (mode == "multi")
    {
      op = build_blur_multi(img.n, s);
    }
    else
    {
      throw usage_error("--blur: mode must be single or multi");
    }
    out.problem = deblur_problem(op, to_qvector(img), "blur");
    out.image_ext = img.channels == 4 ? ".qimg4" : ".ppm";
    out.image = std::move(img);
  }
  else
  {
    throw usage_error("unknown problem '" + cfg.problem + "'");
  }
  return out;
}

std::vector<std::string> parse_solvers(const std::string &list)
{
  std::vector<std::string> out;
  for (const auto &s : split(list))
  {
    if (std::find(known_solvers.begin(), known_solvers.end(), s) == known_solvers.end())
    {
      throw usage_error("unknown solver '" + s + "'");
    }
    out.push_back(s);
  }
  if (out.empty())
  {
    throw usage_error("--solvers: need at least one solver");
  }
  return out;
}

struct Run
{
  std::string solver;
  SolveReport report;
  std::vector<double> true_rr;
};

Run run_solver(const std::string &name, const Problem &p, const Config &cfg, const Preconditioner *m)
{
  SolveOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  opts.record_history = cfg.history;
  Run run{name, {}, {}};
  const double b_norm = norm(p.b);
  if (cfg.history)
  {
    // true residual of every iterate, for the history file
    opts.observer = [&](std::size_t, std::span<const Quaternion> x) {
      const QVector r = p.b - p.op->apply(x);
      run.true_rr.push_back(b_norm > 0 ? norm(r) / b_norm : 0.0);
    };
  }
  const QLinearOperator &a = *p.op;
  if (name == "qbicg")
  {
    run.report = qbicg_solve(a, p.b, {}, opts);
  }
  else if (name == "qqmr3")
  {
    run.report = qqmr3_solve(a, p.b, {}, opts);
  }
  else if (name == "qqmr2")
  {
    run.report = qqmr2_solve(a, p.b, {}, opts);
  }
  else
  {
    const auto variant = name == "pqqmr3" ? QmrVariant::three_term : QmrVariant::two_term;
    run.report = pqqmr_solve(variant, a, p.b, {}, *m, opts);
  }
  return run;
}

std::ofstream open_csv(const fs::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw io_error("cannot write " + path.string());
  }
  return out;
}

void write_history(const fs::path &dir, const Run &run)
{
  auto out = open_csv(dir / ("history_" + run.solver + ".csv"));
  out << "iter,true_rr,quasi_rr,wall_ms\n";
  const auto &h = run.report.history;
  for (std::size_t k = 0; k < h.size(); ++k)
  {
    const double t = k < run.true_rr.size() ? run.true_rr[k] : h[k].rr;
    out << h[k].iter << ',' << fmt(t) << ',' << fmt(h[k].quasi_rr) << ',' << fmt(h[k].wall_ms) << '\n';
  }
}

void write_gnuplot(const fs::path &dir, const std::vector<Run> &runs)
{
  std::ofstream out(dir / "history.gp");
  if (!out)
  {
    throw io_error("cannot write " + (dir / "history.gp").string());
  }
  out << "set datafile separator ','\n"
      << "set logscale y\n"
      << "set format y '%.0e'\n"
      << "set xlabel 'iteration'\n"
      << "set ylabel 'relative residual'\n"
      << "set key top right\n"
      << "plot ";
  for (std::size_t k = 0; k < runs.size(); ++k)
  {
    out << (k ? ", \\\n     " : "") << "'history_" << runs[k].solver << ".csv' using 1:2 skip 1 with lines title '"
        << runs[k].solver << "'";
  }
  out << '\n';
}

int run(const Config &cfg)
{
  const auto solvers = parse_solvers(cfg.solvers);
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1)
  {
    throw usage_error("need --tol > 0 and --max-iter >= 1");
  }
  Built built = build_problem(cfg);
  const Problem &p = built.problem;
  if (p.op->rows() != p.op->cols())
  {
    throw usage_error("problem is not square");
  }

  std::unique_ptr<SsorPreconditioner> ssor;
  for (const auto &s : solvers)
  {
    if (s.rfind("pqqmr", 0) == 0 && !ssor)
    {
      if (!p.matrix)
      {
        throw usage_error(s + " needs an explicit matrix for SSOR; problem '" + cfg.problem + "' has none");
      }
      ssor = std::make_unique<SsorPreconditioner>(*p.matrix);
    }
  }

  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
  {
    throw io_error("cannot create output directory " + dir.string() + ": " + ec.message());
  }

  std::vector<Run> runs;
  for (const auto &s : solvers)
  {
    runs.push_back(run_solver(s, p, cfg, ssor.get()));
    const auto &r = runs.back().report;
    std::cout << s << ": " << to_string(r.termination) << " after " << r.iterations << " iterations, RR "
              << fmt(r.true_final_rr) << '\n';
  }

  auto summary = open_csv(dir / "summary.csv");
  summary << "solver,IT,CPU,RR,termination,seed\n";
  for (const auto &r : runs)
  {
    summary << r.solver << ',' << r.report.iterations << ',' << fmt(r.report.wall_seconds) << ','
            << fmt(r.report.true_final_rr) << ',' << to_string(r.report.termination) << ',' << cfg.seed << '\n';
  }
  if (cfg.history)
  {
    for (const auto &r : runs)
    {
      write_history(dir, r);
    }
    if (cfg.gnuplot)
    {
      write_gnuplot(dir, runs);
    }
  }

  if (built.image)
  {
    const ColorImage &truth = *built.image;
    const int ch = truth.channels;
    const std::size_t n = truth.n;
    const QVector &x = *p.truth;
    auto metrics = open_csv(dir / "metrics.csv");
    metrics << "solver,PSNR,SSIM,CPU,RR\n";
    auto emit = [&](const std::string &name, const QVector &v, double cpu, double rr) {
      ColorImage img = from_qvector(v, n, ch);
      clamp_pixels(img);
      const QVector clamped = to_qvector(img);
      metrics << name << ',' << fmt(psnr(clamped, x, n, 255.0, ch)) << ',' << fmt(ssim(clamped, x, 255.0, ch)) << ','
              << fmt(cpu) << ',' << fmt(rr) << '\n';
      write_image(dir / (name + built.image_ext), img);
    };
    emit("blurred", p.b, 0.0, std::nan(""));
    for (const auto &r : runs)
    {
      emit(r.solver, r.report.x, r.report.wall_seconds, r.report.true_final_rr);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Quaternion QMR experiment driver"};
  Config cfg;
  app.add_option("--problem", cfg.problem, "identity | convdiff | mtx | chen | blur")
    ->check(CLI::IsMember({"identity", "convdiff", "mtx", "chen", "blur"}));
  app.add_option("--mtx", cfg.mtx, "Matrix Market file for --problem mtx");
  app.add_option("--coeffs", cfg.coeffs, "channel coefficients c0,c1,c2,c3");
  app.add_option("--chen", cfg.chen, "T,h,p,q,noise for --problem chen");
  app.add_option("--blur", cfg.blur, "img,mode,sigma,r,s for --problem blur (mode: single | multi)");
  app.add_option("--solvers", cfg.solvers, "comma list of qbicg, qqmr3, qqmr2, pqqmr3, pqqmr2");
  app.add_option("--tol", cfg.tol, "relative residual tolerance");
  app.add_option("--max-iter", cfg.max_iter, "iteration cap");
  app.add_option("--seed", cfg.seed, "seed for generated right-hand sides and noise");
  app.add_option("--out", cfg.out, "output directory");
  app.add_flag("--history", cfg.history, "write history_<solver>.csv per solver");
  app.add_flag("--gnuplot", cfg.gnuplot, "also write history.gp (needs --history)");
  app.add_option("--n", cfg.n, "order of the identity problem, grid side of convdiff");
  app.add_option("--convection", cfg.convection, "convection coefficient of convdiff");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try
  {
    return run(cfg);
  }
  catch (const io_error &e)
  {
    std::cerr << "I/O error: " << e.what() << '\n';
    return exit_io;
  }
  catch (const parse_error &e)
  {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_io;
  }
  catch (const usage_error &e)
  {
    std::cerr << "configuration error: " << e.what() << '\n';
    return exit_config;
  }
  catch (const divergence_error &e)
  {
    std::cerr << "configuration error: " << e.what() << '\n';
    return exit_config;
  }
}
