#pragma once

// Dormand-Prince 8(5,3) with 7th-order dense output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "s2cubic/errors.hpp"

namespace s2c::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

namespace dop {
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double c14 = 0.1e+00;
constexpr double c15 = 0.2e+00;
constexpr double c16 = 0.777777777777777777777777777778e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double a141 = 5.61675022830479523392909219681e-2;
constexpr double a147 = 2.53500210216624811088794765333e-1;
constexpr double a148 = -2.46239037470802489917441475441e-1;
constexpr double a149 = -1.24191423263816360469010140626e-1;
constexpr double a1410 = 1.5329179827876569731206322685e-1;
constexpr double a1411 = 8.20105229563468988491666602057e-3;
constexpr double a1412 = 7.56789766054569976138603589584e-3;
constexpr double a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2;
constexpr double a156 = 2.83009096723667755288322961402e-2;
constexpr double a157 = 5.35419883074385676223797384372e-2;
constexpr double a158 = -5.49237485713909884646569340306e-2;
constexpr double a1511 = -1.08347328697249322858509316994e-4;
constexpr double a1512 = 3.82571090835658412954920192323e-4;
constexpr double a1513 = -3.40465008687404560802977114492e-4;
constexpr double a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1;
constexpr double a166 = -4.69762141536116384314449447206e0;
constexpr double a167 = 7.68342119606259904184240953878e0;
constexpr double a168 = 4.06898981839711007970213554331e0;
constexpr double a169 = 3.56727187455281109270669543021e-1;
constexpr double a1613 = -1.39902416515901462129418009734e-3;
constexpr double a1614 = 2.9475147891527723389556272149e0;
constexpr double a1615 = -9.15095847217987001081870187138e0;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

constexpr double d41 = -0.84289382761090128651353491142e+01;
constexpr double d46 = 0.56671495351937776962531783590e+00;
constexpr double d47 = -0.30689499459498916912797304727e+01;
constexpr double d48 = 0.23846676565120698287728149680e+01;
constexpr double d49 = 0.21170345824450282767155149946e+01;
constexpr double d410 = -0.87139158377797299206789907490e+00;
constexpr double d411 = 0.22404374302607882758541771650e+01;
constexpr double d412 = 0.63157877876946881815570249290e+00;
constexpr double d413 = -0.88990336451333310820698117400e-01;
constexpr double d414 = 0.18148505520854727256656404962e+02;
constexpr double d415 = -0.91946323924783554000451984436e+01;
constexpr double d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02;
constexpr double d56 = 0.24228349177525818288430175319e+03;
constexpr double d57 = 0.16520045171727028198505394887e+03;
constexpr double d58 = -0.37454675472269020279518312152e+03;
constexpr double d59 = -0.22113666853125306036270938578e+02;
constexpr double d510 = 0.77334326684722638389603898808e+01;
constexpr double d511 = -0.30674084731089398182061213626e+02;
constexpr double d512 = -0.93321305264302278729567221706e+01;
constexpr double d513 = 0.15697238121770843886131091075e+02;
constexpr double d514 = -0.31139403219565177677282850411e+02;
constexpr double d515 = -0.93529243588444783865713862664e+01;
constexpr double d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02;
constexpr double d66 = -0.38703730874935176555105901742e+03;
constexpr double d67 = -0.18917813819516756882830838328e+03;
constexpr double d68 = 0.52780815920542364900561016686e+03;
constexpr double d69 = -0.11573902539959630126141871134e+02;
constexpr double d610 = 0.68812326946963000169666922661e+01;
constexpr double d611 = -0.10006050966910838403183860980e+01;
constexpr double d612 = 0.77771377980534432092869265740e+00;
constexpr double d613 = -0.27782057523535084065932004339e+01;
constexpr double d614 = -0.60196695231264120758267380846e+02;
constexpr double d615 = 0.84320405506677161018159903784e+02;
constexpr double d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02;
constexpr double d76 = -0.15418974869023643374053993627e+03;
constexpr double d77 = -0.23152937917604549567536039109e+03;
constexpr double d78 = 0.35763911791061412378285349910e+03;
constexpr double d79 = 0.93405324183624310003907691704e+02;
constexpr double d710 = -0.37458323136451633156875139351e+02;
constexpr double d711 = 0.10409964950896230045147246184e+03;
constexpr double d712 = 0.29840293426660503123344363579e+02;
constexpr double d713 = -0.43533456590011143754432175058e+02;
constexpr double d714 = 0.96324553959188282948394950600e+02;
constexpr double d715 = -0.39177261675615439165231486172e+02;
constexpr double d716 = -0.14972683625798562581422125276e+03;
}  // namespace dop

// One accepted step and its continuous extension. t_new < t_old for
// backward integration.
template <std::size_t N>
struct DenseStep {
    double t_old = 0.0;
    double t_new = 0.0;
    std::array<Vec<N>, 8> r{};

    double lo() const { return std::min(t_old, t_new); }
    double hi() const { return std::max(t_old, t_new); }
    bool contains(double t) const { return lo() <= t && t <= hi(); }

    Vec<N> value(double t) const
    {
        const double s = (t - t_old) / (t_new - t_old);
        const double s1 = 1.0 - s;
        Vec<N> y;
        for (std::size_t i = 0; i < N; ++i) {
            const double a6 = r[6][i] + s * r[7][i];
            const double a5 = r[5][i] + a6 * s1;
            const double a4 = r[4][i] + a5 * s;
            const double a3 = r[3][i] + a4 * s1;
            const double a2 = r[2][i] + a3 * s;
            const double a1 = r[1][i] + a2 * s1;
            y[i] = r[0][i] + s * a1;
        }
        return y;
    }

    Vec<N> derivative(double t) const
    {
        const double h = t_new - t_old;
        const double s = (t - t_old) / h;
        const double s1 = 1.0 - s;
        Vec<N> yp;
        for (std::size_t i = 0; i < N; ++i) {
            const double a6 = r[6][i] + s * r[7][i];
            const double a5 = r[5][i] + a6 * s1;
            const double a4 = r[4][i] + a5 * s;
            const double a3 = r[3][i] + a4 * s1;
            const double a2 = r[2][i] + a3 * s;
            const double a1 = r[1][i] + a2 * s1;
            yp[i] = (a1 - s * (a2 - s1 * (a3 - s * (a4 - s1 * (a5 - s * (a6 - s1 * r[7][i])))))) / h;
        }
        return yp;
    }
};

template <std::size_t N>
struct Dop853Options {
    double rel_tol = 1e-12;
    Vec<N> abs_tol{};
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;
    std::size_t max_steps = 500000;

    Dop853Options() { abs_tol.fill(1e-12); }
};

enum class Dop853Status { completed, stopped, step_underflow, max_steps };

template <std::size_t N>
struct Dop853Result {
    Dop853Status status = Dop853Status::completed;
    std::vector<DenseStep<N>> steps;
    double t_end = 0.0;
    Vec<N> y_end{};
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::string last_failure;
};

namespace detail {

template <std::size_t N>
bool all_finite(const Vec<N>& v)
{
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace detail

// Integrates y' = f(t, y) from t0 to t1. f may throw s2c::Error; a throwing
// stage rejects the step and shrinks it. monitor(step) is called after each
// accepted step and returns false to stop.
template <std::size_t N, class Rhs, class Monitor>
Dop853Result<N> dop853(Rhs&& f, double t0, const Vec<N>& y0, double t1,
                       const Dop853Options<N>& opt, Monitor&& monitor)
{
    using namespace dop;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (!(opt.rel_tol > 0.0)) throw Error(Errc::invalid_argument, "rel_tol must be positive");

    Dop853Result<N> res;
    res.t_end = t0;
    res.y_end = y0;
    if (t1 == t0) return res;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    double t = t0;
    Vec<N> y = y0;
    Vec<N> k1 = f(t, y);

    auto scale = [&](std::size_t i, double a, double b) {
        return opt.abs_tol[i] + opt.rel_tol * std::max(std::abs(a), std::abs(b));
    };

    double h = opt.initial_step;
    if (!(h > 0.0)) {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = scale(i, y[i], y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, std::abs(t1 - t0));
        double h1 = h0;
        try {
            Vec<N> ye;
            for (std::size_t i = 0; i < N; ++i) ye[i] = y[i] + dir * h0 * k1[i];
            const Vec<N> f1 = f(t + dir * h0, ye);
            double d2 = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = scale(i, y[i], y[i]);
                d2 += ((f1[i] - k1[i]) / sc) * ((f1[i] - k1[i]) / sc);
            }
            d2 = std::sqrt(d2 / N) / h0;
            const double dm = std::max(d1, d2);
            h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 8.0);
        } catch (const Error&) {
            h1 = h0 * 1e-3;
        }
        h = std::min(100.0 * h0, h1);
    }
    h = std::min({h, opt.max_step, std::abs(t1 - t0)});

    bool last_rejected = false;
    std::array<Vec<N>, 17> k;
    while (true) {
        if (res.accepted + res.rejected >= opt.max_steps) {
            res.status = Dop853Status::max_steps;
            break;
        }
        if (h < 16.0 * eps * std::max(1.0, std::abs(t))) {
            res.status = Dop853Status::step_underflow;
            break;
        }
        bool final_step = false;
        if (std::abs(t1 - t) <= h * (1.0 + 1e-14)) {
            h = std::abs(t1 - t);
            final_step = true;
        }
        const double hs = dir * h;

        Vec<N> y_new{};
        double err = 0.0;
        bool stage_ok = true;
        try {
            k[1] = k1;
            Vec<N> w;
            auto stage = [&](double c, auto&& combo) {
                for (std::size_t i = 0; i < N; ++i) w[i] = y[i] + hs * combo(i);
                return f(t + c * hs, w);
            };
            k[2] = stage(c2, [&](std::size_t i) { return a21 * k[1][i]; });
            k[3] = stage(c3, [&](std::size_t i) { return a31 * k[1][i] + a32 * k[2][i]; });
            k[4] = stage(c4, [&](std::size_t i) { return a41 * k[1][i] + a43 * k[3][i]; });
            k[5] = stage(c5, [&](std::size_t i) { return a51 * k[1][i] + a53 * k[3][i] + a54 * k[4][i]; });
            k[6] = stage(c6, [&](std::size_t i) { return a61 * k[1][i] + a64 * k[4][i] + a65 * k[5][i]; });
            k[7] = stage(c7, [&](std::size_t i) {
                return a71 * k[1][i] + a74 * k[4][i] + a75 * k[5][i] + a76 * k[6][i];
            });
            k[8] = stage(c8, [&](std::size_t i) {
                return a81 * k[1][i] + a84 * k[4][i] + a85 * k[5][i] + a86 * k[6][i] + a87 * k[7][i];
            });
            k[9] = stage(c9, [&](std::size_t i) {
                return a91 * k[1][i] + a94 * k[4][i] + a95 * k[5][i] + a96 * k[6][i] + a97 * k[7][i] +
                       a98 * k[8][i];
            });
            k[10] = stage(c10, [&](std::size_t i) {
                return a101 * k[1][i] + a104 * k[4][i] + a105 * k[5][i] + a106 * k[6][i] + a107 * k[7][i] +
                       a108 * k[8][i] + a109 * k[9][i];
            });
            k[11] = stage(c11, [&](std::size_t i) {
                return a111 * k[1][i] + a114 * k[4][i] + a115 * k[5][i] + a116 * k[6][i] + a117 * k[7][i] +
                       a118 * k[8][i] + a119 * k[9][i] + a1110 * k[10][i];
            });
            k[12] = stage(1.0, [&](std::size_t i) {
                return a121 * k[1][i] + a124 * k[4][i] + a125 * k[5][i] + a126 * k[6][i] + a127 * k[7][i] +
                       a128 * k[8][i] + a129 * k[9][i] + a1210 * k[10][i] + a1211 * k[11][i];
            });

            double err3 = 0.0, err5 = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double bsum = b1 * k[1][i] + b6 * k[6][i] + b7 * k[7][i] + b8 * k[8][i] + b9 * k[9][i] +
                                    b10 * k[10][i] + b11 * k[11][i] + b12 * k[12][i];
                y_new[i] = y[i] + hs * bsum;
                const double sc = scale(i, y[i], y_new[i]);
                const double e3 = bsum - e31 * k[1][i] - e32 * k[9][i] - e33 * k[12][i];
                const double e5 = e51 * k[1][i] + e56 * k[6][i] + e57 * k[7][i] + e58 * k[8][i] +
                                  e59 * k[9][i] + e510 * k[10][i] + e511 * k[11][i] + e512 * k[12][i];
                err3 += (e3 / sc) * (e3 / sc);
                err5 += (e5 / sc) * (e5 / sc);
            }
            const double deno = err5 + 0.01 * err3;
            err = deno > 0.0 ? h * err5 / std::sqrt(N * deno) : 0.0;
            if (!std::isfinite(err) || !detail::all_finite(y_new)) stage_ok = false;
        } catch (const Error& e) {
            res.last_failure = e.what();
            stage_ok = false;
        }

        if (!stage_ok) {
            h *= 0.25;
            ++res.rejected;
            last_rejected = true;
            continue;
        }

        if (err > 1.0) {
            h *= std::max(0.9 * std::pow(err, -0.125), 0.333);
            ++res.rejected;
            last_rejected = true;
            continue;
        }

        DenseStep<N> step;
        const double t_new = final_step ? t1 : t + hs;
        try {
            k[13] = f(t_new, y_new);
            Vec<N> w;
            for (std::size_t i = 0; i < N; ++i)
                w[i] = y[i] + hs * (a141 * k[1][i] + a147 * k[7][i] + a148 * k[8][i] + a149 * k[9][i] +
                                    a1410 * k[10][i] + a1411 * k[11][i] + a1412 * k[12][i] + a1413 * k[13][i]);
            k[14] = f(t + c14 * hs, w);
            for (std::size_t i = 0; i < N; ++i)
                w[i] = y[i] + hs * (a151 * k[1][i] + a156 * k[6][i] + a157 * k[7][i] + a158 * k[8][i] +
                                    a1511 * k[11][i] + a1512 * k[12][i] + a1513 * k[13][i] + a1514 * k[14][i]);
            k[15] = f(t + c15 * hs, w);
            for (std::size_t i = 0; i < N; ++i)
                w[i] = y[i] + hs * (a161 * k[1][i] + a166 * k[6][i] + a167 * k[7][i] + a168 * k[8][i] +
                                    a169 * k[9][i] + a1613 * k[13][i] + a1614 * k[14][i] + a1615 * k[15][i]);
            k[16] = f(t + c16 * hs, w);
        } catch (const Error& e) {
            res.last_failure = e.what();
            h *= 0.25;
            ++res.rejected;
            last_rejected = true;
            continue;
        }

        step.t_old = t;
        step.t_new = t_new;
        for (std::size_t i = 0; i < N; ++i) {
            step.r[0][i] = y[i];
            step.r[1][i] = y_new[i] - y[i];
            step.r[2][i] = hs * k[1][i] - step.r[1][i];
            step.r[3][i] = step.r[1][i] - hs * k[13][i] - step.r[2][i];
            step.r[4][i] = hs * (d41 * k[1][i] + d46 * k[6][i] + d47 * k[7][i] + d48 * k[8][i] + d49 * k[9][i] +
                                 d410 * k[10][i] + d411 * k[11][i] + d412 * k[12][i] + d413 * k[13][i] +
                                 d414 * k[14][i] + d415 * k[15][i] + d416 * k[16][i]);
            step.r[5][i] = hs * (d51 * k[1][i] + d56 * k[6][i] + d57 * k[7][i] + d58 * k[8][i] + d59 * k[9][i] +
                                 d510 * k[10][i] + d511 * k[11][i] + d512 * k[12][i] + d513 * k[13][i] +
                                 d514 * k[14][i] + d515 * k[15][i] + d516 * k[16][i]);
            step.r[6][i] = hs * (d61 * k[1][i] + d66 * k[6][i] + d67 * k[7][i] + d68 * k[8][i] + d69 * k[9][i] +
                                 d610 * k[10][i] + d611 * k[11][i] + d612 * k[12][i] + d613 * k[13][i] +
                                 d614 * k[14][i] + d615 * k[15][i] + d616 * k[16][i]);
            step.r[7][i] = hs * (d71 * k[1][i] + d76 * k[6][i] + d77 * k[7][i] + d78 * k[8][i] + d79 * k[9][i] +
                                 d710 * k[10][i] + d711 * k[11][i] + d712 * k[12][i] + d713 * k[13][i] +
                                 d714 * k[14][i] + d715 * k[15][i] + d716 * k[16][i]);
        }

        ++res.accepted;
        res.steps.push_back(step);
        t = t_new;
        y = y_new;
        k1 = k[13];
        res.t_end = t;
        res.y_end = y;

        if (!monitor(res.steps.back())) {
            res.status = Dop853Status::stopped;
            break;
        }
        if (final_step) {
            res.status = Dop853Status::completed;
            break;
        }

        double fac = err == 0.0 ? 6.0 : std::clamp(0.9 * std::pow(err, -0.125), 0.333, 6.0);
        if (last_rejected) fac = std::min(fac, 1.0);
        last_rejected = false;
        h = std::min(h * fac, opt.max_step);
    }
    return res;
}

template <std::size_t N, class Rhs>
Dop853Result<N> dop853(Rhs&& f, double t0, const Vec<N>& y0, double t1, const Dop853Options<N>& opt)
{
    return dop853<N>(f, t0, y0, t1, opt, [](const DenseStep<N>&) { return true; });
}

// Bisection for a sign change of g(t, y(t)) inside one step. Returns the
// endpoint of the final bracket on the side where g has the sign of g(t_new).
template <std::size_t N, class G>
double locate_crossing(const DenseStep<N>& step, G&& g, double tol = 1e-12)
{
    double a = step.t_old;
    double b = step.t_new;
    const double ga = g(a, step.value(a));
    for (int it = 0; it < 200 && std::abs(b - a) > tol; ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m, step.value(m));
        if ((gm > 0.0) == (ga > 0.0))
            a = m;
        else
            b = m;
    }
    return b;
}

// Piecewise dense solution assembled from accepted steps, ordered by time.
template <std::size_t N>
class DenseSolution {
public:
    DenseSolution() = default;

    // Steps from a single integration; backward runs are reversed.
    explicit DenseSolution(std::vector<DenseStep<N>> steps) : steps_(std::move(steps))
    {
        if (!steps_.empty() && steps_.front().t_new < steps_.front().t_old)
            std::reverse(steps_.begin(), steps_.end());
    }

    void append(const std::vector<DenseStep<N>>& more)
    {
        std::vector<DenseStep<N>> tmp = more;
        if (!tmp.empty() && tmp.front().t_new < tmp.front().t_old) std::reverse(tmp.begin(), tmp.end());
        steps_.insert(steps_.end(), tmp.begin(), tmp.end());
        std::sort(steps_.begin(), steps_.end(),
                  [](const DenseStep<N>& a, const DenseStep<N>& b) { return a.lo() < b.lo(); });
    }

    bool empty() const { return steps_.empty(); }
    double t_min() const { return steps_.front().lo(); }
    double t_max() const { return steps_.back().hi(); }
    const std::vector<DenseStep<N>>& steps() const { return steps_; }

    const DenseStep<N>& step_at(double t) const
    {
        if (steps_.empty()) throw Error(Errc::invalid_argument, "empty dense solution");
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                   [](double v, const DenseStep<N>& s) { return v < s.hi(); });
        if (it == steps_.end()) --it;
        return *it;
    }

    Vec<N> value(double t) const { return step_at(t).value(t); }
    Vec<N> derivative(double t) const { return step_at(t).derivative(t); }

private:
    std::vector<DenseStep<N>> steps_;
};

}  // namespace s2c::ode
