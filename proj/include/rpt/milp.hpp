#pragma once

// Solver-agnostic MILP modeling layer. Models are plain data; solving is
// delegated to HiGHS (via scipy.optimize.milp) running in a persistent
// python worker process, one JSON request/response line per solve.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace rpt::milp {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCheckTol = 1e-6;

enum class VarDomain { continuous, integer, binary };
enum class Sense { le, ge, eq };
enum class ObjSense { minimize, maximize };

struct Variable {
    std::string name;
    VarDomain domain = VarDomain::continuous;
    double lb = 0.0;
    double ub = kInf;
};

struct Constraint {
    std::string name;
    std::vector<std::pair<int, double>> terms;  // (var index, coefficient)
    Sense sense = Sense::le;
    double rhs = 0.0;
};

enum class SolveStatus {
    optimal,
    feasible_limit_hit,
    cutoff_triggered,
    infeasible,
    unbounded,
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::infeasible;
    std::vector<double> values;
    double objective = 0.0;
    double bound = 0.0;

    bool has_incumbent() const {
        return status == SolveStatus::optimal ||
               status == SolveStatus::feasible_limit_hit ||
               status == SolveStatus::cutoff_triggered;
    }
};

class MilpModel {
public:
    ObjSense sense = ObjSense::minimize;
    double objective_offset = 0.0;
    double time_limit = kInf;        // seconds
    double cutoff = std::numeric_limits<double>::quiet_NaN();  // early-stop threshold
    double mip_gap = 1e-4;

    int add_var(std::string name, VarDomain dom, double lb, double ub,
                double obj_coef = 0.0) {
        if (lb > ub) throw std::runtime_error("variable bounds crossed: " + name);
        vars_.push_back({std::move(name), dom, lb, ub});
        obj_.push_back(obj_coef);
        return (int)vars_.size() - 1;
    }

    void set_obj(int v, double coef) { obj_[v] = coef; }
    void add_obj(int v, double coef) { obj_[v] += coef; }

    void set_bounds(int v, double lb, double ub) {
        if (lb > ub) throw std::runtime_error("variable bounds crossed: " + vars_[v].name);
        vars_[v].lb = lb;
        vars_[v].ub = ub;
    }

    void add_con(std::string name, std::vector<std::pair<int, double>> terms,
                 Sense sense, double rhs) {
        for (auto& [v, c] : terms)
            if (v < 0 || v >= (int)vars_.size())
                throw std::runtime_error("constraint references undeclared variable: " + name);
        cons_.push_back({std::move(name), std::move(terms), sense, rhs});
    }

    const std::vector<Variable>& vars() const { return vars_; }
    const std::vector<Constraint>& cons() const { return cons_; }
    const std::vector<double>& obj() const { return obj_; }

    double eval_objective(const std::vector<double>& x) const {
        double v = objective_offset;
        for (std::size_t i = 0; i < obj_.size(); ++i) v += obj_[i] * x[i];
        return v;
    }

    // Independent feasibility recheck; returns names of violated rows/bounds.
    std::vector<std::string> check(const std::vector<double>& x,
                                   double tol = kCheckTol) const {
        std::vector<std::string> bad;
        if (x.size() != vars_.size()) return {"solution size mismatch"};
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            const auto& v = vars_[i];
            if (x[i] < v.lb - tol || x[i] > v.ub + tol)
                bad.push_back("bounds:" + v.name);
            if (v.domain != VarDomain::continuous &&
                std::fabs(x[i] - std::round(x[i])) > tol)
                bad.push_back("integrality:" + v.name);
        }
        for (const auto& c : cons_) {
            double lhs = 0;
            for (auto [v, coef] : c.terms) lhs += coef * x[v];
            bool ok = c.sense == Sense::le   ? lhs <= c.rhs + tol
                      : c.sense == Sense::ge ? lhs >= c.rhs - tol
                                             : std::fabs(lhs - c.rhs) <= tol;
            if (!ok) bad.push_back(c.name);
        }
        return bad;
    }

    // Standard LP-format export for debugging.
    void write_lp(std::ostream& os) const {
        os << (sense == ObjSense::minimize ? "Minimize" : "Maximize") << "\n obj:";
        for (std::size_t i = 0; i < obj_.size(); ++i)
            if (obj_[i] != 0)
                os << (obj_[i] >= 0 ? " + " : " - ") << std::fabs(obj_[i]) << " "
                   << vars_[i].name;
        os << "\nSubject To\n";
        for (const auto& c : cons_) {
            os << " " << c.name << ":";
            for (auto [v, coef] : c.terms)
                os << (coef >= 0 ? " + " : " - ") << std::fabs(coef) << " "
                   << vars_[v].name;
            os << (c.sense == Sense::le ? " <= " : c.sense == Sense::ge ? " >= " : " = ")
               << c.rhs << "\n";
        }
        os << "Bounds\n";
        for (const auto& v : vars_) {
            if (v.lb == -kInf && v.ub == kInf)
                os << " " << v.name << " free\n";
            else {
                os << " ";
                if (v.lb != -kInf) os << v.lb << " <= ";
                os << v.name;
                if (v.ub != kInf) os << " <= " << v.ub;
                os << "\n";
            }
        }
        os << "Generals\n";
        for (const auto& v : vars_)
            if (v.domain == VarDomain::integer) os << " " << v.name << "\n";
        os << "Binaries\n";
        for (const auto& v : vars_)
            if (v.domain == VarDomain::binary) os << " " << v.name << "\n";
        os << "End\n";
    }

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> cons_;
    std::vector<double> obj_;
};

namespace detail {

// scipy.optimize.milp worker. Reads one JSON request per line, answers with
// one JSON line. Infinities travel as +/-1e30.
inline const char* kWorkerSource = R"PY(
import sys, json
import numpy as np
from scipy import sparse
from scipy.optimize import milp, LinearConstraint, Bounds

BIG = 1e30

def clean(v):
    if v >= BIG: return np.inf
    if v <= -BIG: return -np.inf
    return v

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    n = len(req["lb"])
    lb = np.array([clean(v) for v in req["lb"]])
    ub = np.array([clean(v) for v in req["ub"]])
    integrality = np.array(req["int"])
    c = np.array(req["obj"])
    sign = -1.0 if req["maximize"] else 1.0
    constraints = []
    if req["rows"]:
        data, ri, ci, clo, cup = [], [], [], [], []
        for k, row in enumerate(req["rows"]):
            for v, coef in zip(row["v"], row["c"]):
                ri.append(k); ci.append(v); data.append(coef)
            clo.append(clean(row["lo"])); cup.append(clean(row["up"]))
        A = sparse.csr_matrix((data, (ri, ci)), shape=(len(req["rows"]), n))
        constraints = [LinearConstraint(A, np.array(clo), np.array(cup))]
    options = {}
    if req.get("time_limit") is not None:
        options["time_limit"] = req["time_limit"]
    if req.get("mip_gap") is not None:
        options["mip_rel_gap"] = req["mip_gap"]
    try:
        res = milp(c=sign * c, constraints=constraints, integrality=integrality,
                   bounds=Bounds(lb, ub), options=options)
        status = int(res.status)
        if status == 3:
            # HiGHS presolve may report "infeasible or unbounded"; a zero
            # objective resolves the ambiguity.
            probe = milp(c=np.zeros(n), constraints=constraints,
                         integrality=integrality, bounds=Bounds(lb, ub))
            if probe.status == 2:
                status = 2
        out = {"status": status,
               "x": None if res.x is None else [float(v) for v in res.x],
               "obj": None if res.x is None else float(c @ res.x),
               "bound": float(sign * res.mip_dual_bound)
                        if getattr(res, "mip_dual_bound", None) is not None
                        else (float(sign * res.fun) if res.fun is not None else None)}
    except Exception as exc:  # malformed model or solver failure
        out = {"status": -1, "error": str(exc)}
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
)PY";

class Worker {
public:
    Worker() { spawn(); }
    ~Worker() { shutdown(); }
    Worker(const Worker&) = delete;
    Worker& operator=(const Worker&) = delete;

    std::string request(const std::string& line) {
        if (pid_ < 0) spawn();
        std::string payload = line + "\n";
        if (!write_all(payload)) {
            // worker died; one respawn attempt
            shutdown();
            spawn();
            if (!write_all(payload))
                throw std::runtime_error("milp worker unavailable (write failed)");
        }
        std::string reply = read_line();
        if (reply.empty())
            throw std::runtime_error("milp worker unavailable (no reply)");
        return reply;
    }

private:
    void spawn() {
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw std::runtime_error("pipe() failed");
        pid_ = fork();
        if (pid_ < 0) throw std::runtime_error("fork() failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execlp("python3", "python3", "-u", "-c", kWorkerSource, (char*)nullptr);
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        signal(SIGPIPE, SIG_IGN);
    }

    void shutdown() {
        if (in_fd_ >= 0) close(in_fd_);
        if (out_fd_ >= 0) close(out_fd_);
        if (pid_ > 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, nullptr, 0);
        }
        pid_ = -1;
        in_fd_ = out_fd_ = -1;
    }

    bool write_all(const std::string& s) {
        std::size_t off = 0;
        while (off < s.size()) {
            ssize_t n = ::write(in_fd_, s.data() + off, s.size() - off);
            if (n <= 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += (std::size_t)n;
        }
        return true;
    }

    std::string read_line() {
        std::string out;
        char ch;
        while (true) {
            ssize_t n = ::read(out_fd_, &ch, 1);
            if (n <= 0) {
                if (n < 0 && errno == EINTR) continue;
                return {};
            }
            if (ch == '\n') return out;
            out.push_back(ch);
        }
    }

    pid_t pid_ = -1;
    int in_fd_ = -1, out_fd_ = -1;
};

inline Worker& shared_worker() {
    static Worker w;
    return w;
}
inline std::mutex& worker_mutex() {
    static std::mutex m;
    return m;
}

inline double fence(double v) {
    if (v == kInf) return 1e30;
    if (v == -kInf) return -1e30;
    return v;
}

}  // namespace detail

inline SolveOutcome solve(const MilpModel& model) {
    nlohmann::json req;
    auto& lb = req["lb"] = nlohmann::json::array();
    auto& ub = req["ub"] = nlohmann::json::array();
    auto& integrality = req["int"] = nlohmann::json::array();
    for (const auto& v : model.vars()) {
        lb.push_back(detail::fence(v.lb));
        ub.push_back(detail::fence(v.ub));
        integrality.push_back(v.domain == VarDomain::continuous ? 0 : 1);
    }
    req["obj"] = model.obj();
    req["maximize"] = model.sense == ObjSense::maximize;
    auto& rows = req["rows"] = nlohmann::json::array();
    for (const auto& c : model.cons()) {
        nlohmann::json row;
        auto& vi = row["v"] = nlohmann::json::array();
        auto& co = row["c"] = nlohmann::json::array();
        for (auto [v, coef] : c.terms) {
            vi.push_back(v);
            co.push_back(coef);
        }
        row["lo"] = c.sense == Sense::le ? -1e30 : c.rhs;
        row["up"] = c.sense == Sense::ge ? 1e30 : c.rhs;
        rows.push_back(std::move(row));
    }
    if (std::isfinite(model.time_limit)) req["time_limit"] = model.time_limit;
    req["mip_gap"] = model.mip_gap;

    std::string reply;
    {
        std::lock_guard<std::mutex> lock(detail::worker_mutex());
        reply = detail::shared_worker().request(req.dump());
    }
    auto res = nlohmann::json::parse(reply);
    int status = res["status"].get<int>();
    if (status == -1)
        throw std::runtime_error("milp solve failed: " +
                                 res.value("error", std::string("unknown")));

    SolveOutcome out;
    if (!res["x"].is_null()) {
        out.values = res["x"].get<std::vector<double>>();
        out.objective = res["obj"].get<double>() + model.objective_offset;
    }
    if (!res["bound"].is_null())
        out.bound = res["bound"].get<double>() + model.objective_offset;
    switch (status) {
        case 0:
            out.status = SolveStatus::optimal;
            break;
        case 1: {  // iteration / time limit
            if (out.values.empty())
                throw std::runtime_error("milp time limit hit without incumbent");
            bool beats_cutoff =
                !std::isnan(model.cutoff) &&
                (model.sense == ObjSense::maximize ? out.objective >= model.cutoff - 1e-9
                                                   : out.objective <= model.cutoff + 1e-9);
            out.status = beats_cutoff ? SolveStatus::cutoff_triggered
                                      : SolveStatus::feasible_limit_hit;
            break;
        }
        case 2:
            out.status = SolveStatus::infeasible;
            break;
        case 3:
            out.status = SolveStatus::unbounded;
            break;
        default:
            throw std::runtime_error("milp solver returned unexpected status");
    }
    return out;
}

}  // namespace rpt::milp
