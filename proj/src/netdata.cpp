#include "netdata.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

namespace gridadmm {

BranchAdmittance derive_admittances(double r, double x, double b_charging,
                                    double tap, double shift) {
    if (r * r + x * x <= 0.0)
        throw ParseError("branch with zero series impedance");
    if (tap <= 0.0)
        throw ParseError("branch with non-positive tap magnitude");
    const std::complex<double> ys = 1.0 / std::complex<double>(r, x);
    const std::complex<double> ysh(0.0, b_charging);
    const std::complex<double> a = std::polar(tap, shift);
    const std::complex<double> yii = (ys + 0.5 * ysh) / (tap * tap);
    const std::complex<double> yij = -ys / std::conj(a);
    const std::complex<double> yji = -ys / a;
    const std::complex<double> yjj = ys + 0.5 * ysh;
    BranchAdmittance out;
    out.gii = yii.real(); out.bii = yii.imag();
    out.gij = yij.real(); out.bij = yij.imag();
    out.gji = yji.real(); out.bji = yji.imag();
    out.gjj = yjj.real(); out.bjj = yjj.imag();
    return out;
}

BranchFlows branch_flows(const BranchAdmittance& y, double vi, double vj,
                         double thi, double thj) {
    const double wi = vi * vi;
    const double wj = vj * vj;
    const double wr = vi * vj * std::cos(thi - thj);
    const double wim = vi * vj * std::sin(thi - thj);
    BranchFlows f;
    f.pij = y.gii * wi + y.gij * wr + y.bij * wim;
    f.qij = -y.bii * wi - y.bij * wr + y.gij * wim;
    f.pji = y.gjj * wj + y.gji * wr - y.bji * wim;
    f.qji = -y.bjj * wj - y.bji * wr - y.gji * wim;
    return f;
}

namespace {

// Matrix blocks of a MATPOWER case: "mpc.<name> = [ rows... ];" with
// '%' comments and ';'-terminated rows.
using Matrix = std::vector<std::vector<double>>;

std::string strip_comments(std::istream& in) {
    std::string out, line;
    while (std::getline(in, line)) {
        const auto pos = line.find('%');
        if (pos != std::string::npos) line.erase(pos);
        out += line;
        out += '\n';
    }
    return out;
}

double parse_scalar(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    auto pos = text.find(key);
    if (pos == std::string::npos)
        throw ParseError("missing mpc." + name);
    pos = text.find('=', pos);
    if (pos == std::string::npos)
        throw ParseError("malformed mpc." + name);
    return std::stod(text.substr(pos + 1));
}

Matrix parse_block(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    auto pos = text.find(key);
    if (pos == std::string::npos)
        throw ParseError("missing matrix mpc." + name);
    pos = text.find('[', pos);
    const auto end = text.find(']', pos);
    if (pos == std::string::npos || end == std::string::npos)
        throw ParseError("malformed matrix mpc." + name);

    Matrix rows;
    std::vector<double> row;
    std::istringstream body(text.substr(pos + 1, end - pos - 1));
    std::string tok;
    while (body >> tok) {
        bool row_done = false;
        if (tok.back() == ';') {
            tok.pop_back();
            row_done = true;
        }
        if (!tok.empty()) {
            try {
                size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("malformed entry '" + tok + "' in mpc." + name);
            }
        }
        if (row_done && !row.empty()) {
            rows.push_back(std::move(row));
            row.clear();
        }
    }
    if (!row.empty()) rows.push_back(std::move(row));
    return rows;
}

void require_cols(const Matrix& m, size_t n, const std::string& name) {
    for (const auto& row : m)
        if (row.size() < n)
            throw ParseError("mpc." + name + " row has " +
                             std::to_string(row.size()) + " columns, expected >= " +
                             std::to_string(n));
}

}  // namespace

PowerNetwork parse_matpower(std::istream& source) {
    const std::string text = strip_comments(source);
    PowerNetwork net;
    net.base_mva = parse_scalar(text, "baseMVA");
    if (net.base_mva <= 0.0) throw ParseError("baseMVA must be positive");
    const double base = net.base_mva;

    const Matrix bus = parse_block(text, "bus");
    const Matrix gen = parse_block(text, "gen");
    const Matrix branch = parse_block(text, "branch");
    const Matrix gencost = parse_block(text, "gencost");
    require_cols(bus, 13, "bus");
    require_cols(gen, 10, "gen");
    require_cols(branch, 11, "branch");
    require_cols(gencost, 4, "gencost");
    if (gencost.size() != gen.size())
        throw ParseError("gencost rows do not match gen rows");

    for (const auto& row : bus) {
        Bus b;
        b.id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        if (type < 1 || type > 3)
            throw ParseError("bus " + std::to_string(b.id) + ": unsupported type");
        b.type = static_cast<BusType>(type);
        b.pd = row[2] / base;
        b.qd = row[3] / base;
        b.gs = row[4] / base;
        b.bs = row[5] / base;
        b.vmax = row[11];
        b.vmin = row[12];
        if (!(b.vmin > 0.0 && b.vmin <= b.vmax))
            throw ParseError("bus " + std::to_string(b.id) + ": bad voltage bounds");
        if (net.bus_index.count(b.id))
            throw ParseError("duplicate bus number " + std::to_string(b.id));
        net.bus_index[b.id] = static_cast<int>(net.buses.size());
        if (b.type == BusType::Ref) {
            if (net.ref_bus >= 0) throw ParseError("multiple REF buses");
            net.ref_bus = net.bus_index[b.id];
        }
        net.buses.push_back(b);
    }
    if (net.ref_bus < 0) throw ParseError("missing REF bus");

    for (size_t k = 0; k < gen.size(); ++k) {
        const auto& row = gen[k];
        if (static_cast<int>(row[7]) == 0) continue;  // out of service
        Generator g;
        const int ext = static_cast<int>(row[0]);
        const auto it = net.bus_index.find(ext);
        if (it == net.bus_index.end())
            throw ParseError("generator references unknown bus " + std::to_string(ext));
        g.bus = it->second;
        g.qmax = row[3] / base;
        g.qmin = row[4] / base;
        g.pmax = row[8] / base;
        g.pmin = row[9] / base;
        if (g.pmin > g.pmax || g.qmin > g.qmax)
            throw ParseError("generator at bus " + std::to_string(ext) + ": bad bounds");

        const auto& cost = gencost[k];
        const int model = static_cast<int>(cost[0]);
        if (model == 1)
            throw ParseError("piecewise-linear generator costs are not supported");
        if (model != 2)
            throw ParseError("unknown gencost model " + std::to_string(model));
        const int n = static_cast<int>(cost[3]);
        if (n < 0 || n > 3 || cost.size() < static_cast<size_t>(4 + n))
            throw ParseError("gencost row with unsupported coefficient count");
        double c[3] = {0.0, 0.0, 0.0};  // c2, c1, c0
        for (int j = 0; j < n; ++j) c[3 - n + j] = cost[4 + j];
        if (c[0] < 0.0)
            throw ParseError("negative quadratic cost coefficient");
        g.c2 = c[0] * base * base;
        g.c1 = c[1] * base;
        g.c0 = c[2];
        net.buses[g.bus].gens.push_back(static_cast<int>(net.generators.size()));
        net.generators.push_back(g);
    }

    constexpr double kPi = std::numbers::pi;
    for (const auto& row : branch) {
        if (static_cast<int>(row[10]) == 0) continue;  // out of service
        Branch br;
        const int f = static_cast<int>(row[0]);
        const int t = static_cast<int>(row[1]);
        const auto fi = net.bus_index.find(f);
        const auto ti = net.bus_index.find(t);
        if (fi == net.bus_index.end() || ti == net.bus_index.end())
            throw ParseError("branch references unknown bus " +
                             std::to_string(fi == net.bus_index.end() ? f : t));
        br.from = fi->second;
        br.to = ti->second;
        br.r = row[2];
        br.x = row[3];
        br.b_charging = row[4];
        br.rate = row[5] / base;
        br.tap = row[8] != 0.0 ? row[8] : 1.0;
        br.shift = row[9] * kPi / 180.0;
        br.y = derive_admittances(br.r, br.x, br.b_charging, br.tap, br.shift);
        net.buses[br.from].from_branches.push_back(static_cast<int>(net.branches.size()));
        net.buses[br.to].to_branches.push_back(static_cast<int>(net.branches.size()));
        net.branches.push_back(br);
    }

    return net;
}

PowerNetwork load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open case file: " + path);
    return parse_matpower(in);
}

}  // namespace gridadmm
