#include "cfdev/cylinders.hpp"

#include <algorithm>
#include <thread>

#include "cfdev/errors.hpp"
#include "mpfr_value.hpp"

namespace cfdev {

namespace {

Rational unit_fraction(const BigInt& den) {
  Rational r;
  mpz_set_ui(mpq_numref(r.get_mpq_t()), 1);
  mpz_set(mpq_denref(r.get_mpq_t()), den.get_mpz_t());
  return r;
}

Cylinder make_cylinder(PartialQuotients prefix, const Continuant& c) {
  Cylinder cyl;
  cyl.prefix = std::move(prefix);
  cyl.convergents = c;
  Rational a(c.p, c.q);
  Rational b(c.p + c.p_prev, c.q + c.q_prev);
  a.canonicalize();
  b.canonicalize();
  if (b < a) std::swap(a, b);
  cyl.endpoint_a = std::move(a);
  cyl.endpoint_b = std::move(b);
  cyl.length = cylinder_length(c);
  return cyl;
}

// Number of items a full enumeration emits: A^n cylinders and sum_{k<n} A^k tails.
long double item_count(unsigned n, unsigned long A) {
  long double total = 0;
  long double power = 1;
  for (unsigned k = 0; k < n; ++k) {
    total += power;
    power *= static_cast<long double>(A);
  }
  return total + power;
}

struct Walker {
  unsigned n;
  unsigned long A;
  BigInt tail_floor;
  const CylinderVisitor* on_cylinder;
  const TailVisitor* on_tail;
  std::uint64_t budget;

  ExactSum cylinders;
  ExactSum tails;
  std::vector<BigInt> digits;

  void emit_check() {
    if (cylinders.count() + tails.count() >= budget) {
      const Rational accounted = cylinders.total() + tails.total();
      throw BudgetExceeded("enumeration budget of " + std::to_string(budget) + " items exhausted",
                           accounted, Rational(1) - accounted,
                           cylinders.count() + tails.count());
    }
  }

  void walk(const Continuant& c) {
    if (digits.size() == n) {
      emit_check();
      cylinders.add_unit(BigInt(c.q * (c.q + c.q_prev)));
      if (*on_cylinder) (*on_cylinder)(make_cylinder(PartialQuotients(digits), c));
      return;
    }
    emit_check();
    const Rational t = tail_mass(c, tail_floor);
    tails.add(t);
    if (*on_tail) (*on_tail)(TailMass{PartialQuotients(digits), tail_floor, t});
    for (unsigned long a = 1; a <= A; ++a) {
      Continuant child = c;
      const BigInt digit(a);
      child.push(digit);
      digits.push_back(digit);
      walk(child);
      digits.pop_back();
    }
  }
};

}  // namespace

Rational cylinder_length(const Continuant& c) { return unit_fraction(c.q * (c.q + c.q_prev)); }

Cylinder cylinder(const PartialQuotients& prefix) {
  return make_cylinder(prefix, continuant(prefix));
}

ChildRatio child_ratio(const PartialQuotients& prefix, const BigInt& a) {
  if (a < 1) throw InvalidInput("digit must be >= 1");
  const Continuant parent = continuant(prefix);
  Continuant child = parent;
  child.push(a);
  ChildRatio out;
  out.ratio = cylinder_length(child) / cylinder_length(parent);
  out.above_lower = out.ratio >= Rational(1, 3 * a * a);
  out.below_upper = out.ratio <= Rational(2, a * a);
  return out;
}

Rational tail_mass(const Continuant& c, const BigInt& digit_floor) {
  if (digit_floor < 1) throw InvalidInput("tail digit floor must be >= 1");
  return unit_fraction(c.q * (digit_floor * c.q + c.q_prev));
}

TailMass tail_mass(const PartialQuotients& prefix, const BigInt& digit_floor) {
  return TailMass{prefix, digit_floor, tail_mass(continuant(prefix), digit_floor)};
}

LevelSummary enumerate_level(unsigned n, unsigned long A, const CylinderVisitor& on_cylinder,
                             const TailVisitor& on_tail, const EnumerationOptions& options) {
  if (n < 1) throw InvalidInput("enumerate_level needs n >= 1");
  if (A < 1) throw InvalidInput("enumerate_level needs A >= 1");

  const bool parallel = !on_cylinder && !on_tail && options.threads > 1 && A > 1 &&
                        item_count(n, A) <= static_cast<long double>(options.budget);
  LevelSummary summary;
  if (!parallel) {
    Walker w{n, A, BigInt(A + 1), &on_cylinder, &on_tail, options.budget, {}, {}, {}};
    w.walk(Continuant{});
    summary.cylinder_mass = w.cylinders.total();
    summary.tail_mass = w.tails.total();
    summary.cylinders = w.cylinders.count();
    summary.tails = w.tails.count();
    return summary;
  }

  // Top-digit partition; subtrees are merged in ascending digit order.
  const CylinderVisitor no_cyl;
  const TailVisitor no_tail;
  std::vector<Walker> walkers;
  walkers.reserve(A);
  for (unsigned long a = 1; a <= A; ++a) {
    walkers.push_back(Walker{n, A, BigInt(A + 1), &no_cyl, &no_tail, options.budget, {}, {}, {}});
  }
  const unsigned threads = std::min<unsigned long>(options.threads, A);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (unsigned long a = 1 + t; a <= A; a += threads) {
        Walker& w = walkers[a - 1];
        Continuant c;
        c.push(BigInt(a));
        w.digits.push_back(BigInt(a));
        w.walk(c);
      }
    });
  }
  for (auto& th : pool) th.join();

  ExactSum cylinders;
  ExactSum tails;
  tails.add(tail_mass(Continuant{}, BigInt(A + 1)));
  for (const auto& w : walkers) {
    cylinders += w.cylinders;
    tails += w.tails;
  }
  summary.cylinder_mass = cylinders.total();
  summary.tail_mass = tails.total();
  summary.cylinders = cylinders.count();
  summary.tails = tails.count();
  return summary;
}

LebesgueSample sample_lebesgue(std::size_t n, const CounterRng& rng) {
  if (n < 1) throw InvalidInput("sample needs n >= 1");
  DigitStream stream(lebesgue_point(rng));
  LebesgueSample out;
  for (std::size_t k = 0; k < n; ++k) {
    auto digit = stream.next();
    out.digits.push_back(std::move(*digit));
  }
  out.convergents = stream.convergents();
  return out;
}

PartialQuotients sample_digits_lebesgue(std::size_t n, const CounterRng& rng) {
  return sample_lebesgue(n, rng).digits;
}

namespace {

// mu([a, b]) = log1p((b - a) / (1 + a)) / log 2, optionally followed by a log.
long double gauss_measure_impl(const Rational& a, const Rational& b, unsigned precision_bits,
                               bool take_log) {
  if (!(a < b)) throw InvalidInput("gauss_measure needs a < b");
  if (sgn(a) < 0 || b > 1) throw InvalidInput("gauss_measure needs 0 <= a < b <= 1");
  const Rational step = (b - a) / (1 + a);
  detail::MpfrValue x(precision_bits);
  detail::MpfrValue log2(precision_bits);
  mpfr_set_q(x.get(), step.get_mpq_t(), MPFR_RNDN);
  mpfr_log1p(x.get(), x.get(), MPFR_RNDN);
  mpfr_const_log2(log2.get(), MPFR_RNDN);
  mpfr_div(x.get(), x.get(), log2.get(), MPFR_RNDN);
  if (take_log) mpfr_log(x.get(), x.get(), MPFR_RNDN);
  return mpfr_get_ld(x.get(), MPFR_RNDN);
}

}  // namespace

long double gauss_measure(const Rational& a, const Rational& b, unsigned precision_bits) {
  return gauss_measure_impl(a, b, precision_bits, false);
}

long double log_gauss_measure(const Rational& a, const Rational& b, unsigned precision_bits) {
  return gauss_measure_impl(a, b, precision_bits, true);
}

CsvTable cylinders_to_csv(const std::vector<Cylinder>& cylinders) {
  CsvTable table;
  table.header = {"prefix", "p", "q", "length_num", "length_den"};
  for (const auto& c : cylinders) {
    table.rows.push_back({c.prefix.to_string(), c.convergents.p.get_str(),
                          c.convergents.q.get_str(), c.length.get_num().get_str(),
                          c.length.get_den().get_str()});
  }
  return table;
}

std::vector<Cylinder> cylinders_from_csv(const CsvTable& table) {
  const std::size_t ip = table.column("prefix");
  const std::size_t pp = table.column("p");
  const std::size_t pq = table.column("q");
  const std::size_t pn = table.column("length_num");
  const std::size_t pd = table.column("length_den");
  std::vector<Cylinder> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Cylinder c = cylinder(PartialQuotients::parse(row[ip]));
    Rational length{BigInt(row[pn]), BigInt(row[pd])};
    length.canonicalize();
    if (c.convergents.p != BigInt(row[pp]) || c.convergents.q != BigInt(row[pq]) ||
        c.length != length) {
      throw InvalidInput("cylinder row '" + row[ip] + "' is inconsistent");
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cfdev
