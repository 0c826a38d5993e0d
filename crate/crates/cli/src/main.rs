use std::path::{Path, PathBuf};
use std::process::ExitCode;

use borcherds_cm::arith::{fmt_rational, parse_rational};
use borcherds_cm::cmvalue::{c00_contraction, check_prime_support, chowla_selberg_display, log_psi_product};
use borcherds_cm::forms::{classical_qexp, load_form, Classical, FourierForm};
use borcherds_cm::gzoracle::{gz_product, gz_support_check};
use borcherds_cm::kappa::kappa_at;
use borcherds_cm::lattice::{IdealLattice, IdealSpec, LatticeFile, SplitLattice};
use borcherds_cm::locwhit::eisenstein_deriv_coeff;
use borcherds_cm::quadfield::{make_field, FieldNumerics};
use borcherds_cm::selftest::{acceptable, run_all};
use borcherds_cm::{Error, Rational};
use clap::{Parser, Subcommand};

pub const DEFAULT_PREC: u32 = 64;

#[derive(Parser, Debug)]
#[command(name = "bcm", version, about = "Exact CM values of Borcherds forms over Q(sqrt(-d))")]
struct Cli {
    /// Working precision in decimal digits.
    #[arg(long, global = true, env = "BCM_PREC", default_value_t = DEFAULT_PREC,
          value_parser = clap::value_parser!(u32).range(10..))]
    prec: u32,
    /// Line-oriented key=value output with exact values only.
    #[arg(long, global = true)]
    machine: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn ideal_arg(s: &str) -> Result<IdealSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Class number, splitting data and the constant κ(0,0).
    Field {
        #[arg(short = 'd')]
        d: u64,
    },
    /// κ(t, μ, 𝔞) from the closed formula.
    Kappa {
        #[arg(short = 'd')]
        d: u64,
        #[arg(long, default_value = "unit", value_parser = ideal_arg)]
        ideal: IdealSpec,
        #[arg(long)]
        mu: usize,
        #[arg(short = 't', value_parser = rational_arg, allow_hyphen_values = true)]
        t: Rational,
        /// Also reassemble the value from local Whittaker functions.
        #[arg(long)]
        oracle: bool,
    },
    /// Local Whittaker polynomials of the Eisenstein coefficient at t.
    Whittaker {
        #[arg(short = 'd')]
        d: u64,
        #[arg(long, default_value = "unit", value_parser = ideal_arg)]
        ideal: IdealSpec,
        #[arg(long)]
        mu: usize,
        #[arg(short = 't', value_parser = rational_arg)]
        t: Rational,
    },
    /// Coefficient-table utilities.
    Form {
        #[command(subcommand)]
        cmd: FormCmd,
    },
    /// Exact q-expansion of delta, e4, e6 or j.
    Qexp {
        #[arg(long)]
        name: String,
        #[arg(short = 'n', default_value_t = 10)]
        terms: usize,
    },
    /// log of the product of ‖Ψ(F)‖² over the CM cycle.
    Cmsum {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long = "vol-kt", value_parser = rational_arg)]
        vol_kt: Option<Rational>,
    },
    /// The rational part as a factored rational.
    Factor {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long = "vol-kt", value_parser = rational_arg)]
        vol_kt: Option<Rational>,
    },
    /// Product of j(τ₁) − j(τ₂) over CM points of discriminants −d1, −d2.
    Gz {
        #[arg(long)]
        d1: u64,
        #[arg(long)]
        d2: u64,
    },
    /// Every acceptance sweep.
    Selftest,
}

#[derive(Subcommand, Debug)]
enum FormCmd {
    /// Checks integrality and the support congruence against a lattice.
    Validate {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Largest pole order m_max.
    Mmax {
        #[arg(long)]
        form: PathBuf,
    },
}

/// Ordered report lines rendered as `key = value` or `key=value`.
struct Report {
    machine: bool,
    lines: Vec<(String, String)>,
}

impl Report {
    fn new(machine: bool) -> Self {
        Self { machine, lines: Vec::new() }
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    /// Text-only line.
    fn text(&mut self, key: &str, value: impl ToString) {
        if !self.machine {
            self.put(key, value);
        }
    }

    /// Machine-only line.
    fn exact(&mut self, key: &str, value: impl ToString) {
        if self.machine {
            self.put(key, value);
        }
    }

    fn print(&self) {
        for (k, v) in &self.lines {
            if self.machine {
                println!("{k}={v}");
            } else {
                println!("{k} = {v}");
            }
        }
    }
}

#[derive(Debug)]
enum Failure {
    Compute(Error),
    Io(PathBuf, std::io::Error),
    Selftest,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn load_lattice(path: &Path) -> Result<SplitLattice, Failure> {
    Ok(LatticeFile::parse(&read(path)?)?.build()?)
}

fn load(form: &Path, lattice: &Path) -> Result<(FourierForm, SplitLattice), Failure> {
    let sl = load_lattice(lattice)?;
    let f = load_form(&read(form)?, &sl)?;
    Ok((f, sl))
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let mut out = Report::new(cli.machine);
    if cli.prec != DEFAULT_PREC {
        out.put("prec", format!("{} (override)", cli.prec));
    }
    match &cli.cmd {
        Cmd::Field { d } => {
            let field = make_field(*d)?;
            out.put("d", field.d);
            out.put("discriminant", field.discriminant());
            out.put("h", field.h);
            out.put("w", field.w);
            out.put("ramified", join(&field.ramified));
            out.put("forms", field.forms.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" "));
            let n = FieldNumerics::compute(&field, cli.prec)?;
            out.put("L(1)", n.l1.to_decimal(cli.prec));
            out.put("L'(0)/L(0)", n.log_deriv_zero.to_decimal(cli.prec));
            out.put("k0", n.k0.to_decimal(cli.prec));
            out.text("chowla_selberg", chowla_selberg_display(&field));
        }
        Cmd::Kappa { d, ideal, mu, t, oracle } => {
            let field = make_field(*d)?;
            let lat = IdealLattice::new(&field, ideal)?;
            let coset = lat.coset(*mu)?;
            let k = kappa_at(&lat, coset, t)?;
            out.text("kappa", &k);
            out.exact("kappa.log", k.log_part.to_power_string());
            out.exact("kappa.k0", fmt_rational(&k.kzero_multiple));
            if *oracle {
                let o = eisenstein_deriv_coeff(&lat, coset, t)?;
                out.text("oracle", &o.kappa);
                out.exact("oracle.log", o.kappa.to_power_string());
                out.put("agree", o.kappa == k.log_part && k.kzero_multiple == Rational::from_integer(0));
            }
        }
        Cmd::Whittaker { d, ideal, mu, t } => {
            let field = make_field(*d)?;
            let lat = IdealLattice::new(&field, ideal)?;
            let o = eisenstein_deriv_coeff(&lat, lat.coset(*mu)?, t)?;
            for w in &o.factors {
                out.put(&format!("W_{}", w.p), w);
            }
            out.put("vanishing", o.vanishing);
            if !o.flags.is_empty() {
                out.put("flags", format!("{:?}", o.flags));
            }
            out.text("kappa", &o.kappa);
            out.exact("kappa.log", o.kappa.to_power_string());
        }
        Cmd::Form { cmd: FormCmd::Validate { form, lattice } } => {
            let (f, sl) = load(form, lattice)?;
            out.put("valid", true);
            out.put("classes", sl.classes().len());
            out.put("coefficients", f.coeffs.len());
            out.put("m_max", fmt_rational(&f.m_max()));
        }
        Cmd::Form { cmd: FormCmd::Mmax { form } } => {
            let f = FourierForm::parse(&read(form)?)?;
            out.put("m_max", fmt_rational(&f.m_max()));
        }
        Cmd::Qexp { name, terms } => {
            let which: Classical = name.parse()?;
            let q = classical_qexp(which, *terms)?;
            out.text(name, &q);
            out.exact("valuation", q.valuation);
            out.exact("coeffs", q.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
        }
        Cmd::Cmsum { form, lattice, vol_kt } => {
            let (f, sl) = load(form, lattice)?;
            let mut rep = log_psi_product(&f, &sl, *vol_kt)?;
            rep.evaluate(sl.field(), cli.prec)?;
            let support = check_prime_support(&rep, sl.field(), &f);
            if cli.machine {
                out.put("d", rep.d);
                out.put("h", rep.h);
                out.put("degree", rep.degree);
                out.put("vol_kt", fmt_rational(&rep.vol_kt));
                out.put("vol_kt_override", rep.vol_kt_overridden);
                out.put("phi_so_u.log", rep.phi.so_u.log_part.to_power_string());
                out.put("phi_so_u.k0", fmt_rational(&rep.phi.so_u.kzero_multiple));
                out.put("phi_cycle_sum.log", rep.phi.cycle_sum.log_part.to_power_string());
                out.put("phi_cycle_sum.k0", fmt_rational(&rep.phi.cycle_sum.kzero_multiple));
                out.put("c00", fmt_rational(&rep.c00));
                out.put("rat", rep.rational_part.to_power_string());
                out.put("kzero_coeff", fmt_rational(&rep.kzero_coeff));
                out.put("transcendental_exponent", fmt_rational(&rep.transcendental_exponent));
                out.put("meets_divisor", rep.meets_divisor);
            } else {
                for line in rep.to_string().lines() {
                    if let Some((k, v)) = line.split_once(" = ") {
                        out.put(k, v);
                    }
                }
                out.put("chowla_selberg_base", chowla_selberg_display(sl.field()));
                if rep.meets_divisor {
                    out.put("note", "the CM cycle meets div Psi(F); values are those of Phi(F)");
                }
            }
            out.put("m_max", fmt_rational(&f.m_max()));
            out.put("support", if support.ok { "OK".to_string() } else { format!("VIOLATED {}", join(&support.violations)) });
        }
        Cmd::Factor { form, lattice, vol_kt } => {
            let (f, sl) = load(form, lattice)?;
            let rep = log_psi_product(&f, &sl, *vol_kt)?;
            match rep.factored_rational() {
                Some(s) => out.put("rat", s),
                None => {
                    return Err(Failure::Compute(Error::Contract(format!(
                        "the product carries a transcendental factor (c00 = {}); use cmsum",
                        fmt_rational(&c00_contraction(&f, &sl)?)
                    ))))
                }
            }
        }
        Cmd::Gz { d1, d2 } => {
            let r = gz_product(*d1, *d2, cli.prec)?;
            let s = gz_support_check(&r);
            let verdict = if s.ok {
                "OK".to_string()
            } else {
                let v: Vec<String> = s.violations.iter().map(|v| format!("{} {}", v.p, v.reason)).collect();
                format!("VIOLATED ({})", v.join("; "))
            };
            if cli.machine {
                out.put("product", &r.product);
                out.put("factorization", r.factorization_string());
                out.put("support", verdict);
                out.put("precision_used", r.precision_used);
                out.put("margin", format!("{:e}", r.margin));
            } else {
                println!("product = {} = {}; support: {verdict}", r.product, r.factorization_string());
                out.put("precision_used", r.precision_used);
            }
        }
        Cmd::Selftest => {
            let outcomes = run_all();
            for o in &outcomes {
                println!("{}", o.line());
            }
            if !acceptable(&outcomes) {
                return Err(Failure::Selftest);
            }
        }
    }
    Ok(out)
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            report.print();
            ExitCode::SUCCESS
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(p, e)) => {
            eprintln!("error: cannot read {}: {e}", p.display());
            ExitCode::from(1)
        }
        Err(Failure::Selftest) => {
            eprintln!("error: selftest has unexpected failures");
            ExitCode::from(1)
        }
    }
}
