use crate::report::{envelope, CliError, CliResult, Output};
use crate::{Bounds, Command, Format, Mode};
use normality_lab::characterization::{condii_estimate, lemma5_check_windows, removal_set, CondIIQuery};
use normality_lab::dseq::{read_dseq, write_dseq};
use normality_lab::independence::{counterexample_digits, dyadic_block_report, window_certify, CounterexampleParams};
use normality_lab::index::{decompose, delta, gap_scan};
use normality_lab::metrics::{aligned_block_freq, normality_score, sliding_block_freq, weyl_sum};
use normality_lab::rng::derive_seed;
use normality_lab::spectral::{
    exponent_fit, l2_exponential_sum_mu, m_q, minimal_truncation, riesz_product_sum, sweep_csv, L2Mode, L2Query,
    RieszQuery, SweepRow,
};
use normality_lab::toeplitz::{extract_free, free_count, sample_iid, sample_mu, toeplitz_transform, SampleSpec};
use normality_lab::{DigitSeq, PrimeSet};
use num_bigint::BigUint;
use serde_json::json;
use std::path::Path;

fn load(path: &Path) -> CliResult<DigitSeq> {
    Ok(read_dseq(path)?)
}

fn save(path: &Path, x: &DigitSeq) -> CliResult<()> {
    Ok(write_dseq(path, x)?)
}

pub fn dispatch(cmd: &Command) -> CliResult<Output> {
    match cmd {
        Command::Decompose(a) => {
            let p = PrimeSet::new(&a.primes)?;
            let rows = a.n.iter().map(|&n| decompose(&p, n)).collect::<Result<Vec<_>, _>>()?;
            Ok(envelope("decompose", a, &rows))
        }
        Command::Transform(a) => {
            let p = PrimeSet::new(&a.primes)?;
            let input = load(&a.input)?;
            let out = if a.extract {
                extract_free(&p, &input)
            } else {
                toeplitz_transform(&p, &input, a.len.expect("clap requires --len"))?
            };
            save(&a.output, &out)?;
            Ok(envelope(
                "transform",
                a,
                &json!({ "base": input.base(), "input_len": input.len(), "output_len": out.len() }),
            ))
        }
        Command::Sample(a) => {
            let x = if a.iid {
                sample_iid(a.base, a.len, a.seed)?
            } else {
                let primes = PrimeSet::new(&a.primes)?;
                sample_mu(&SampleSpec { primes, base: a.base, len: a.len, seed: a.seed })?
            };
            save(&a.output, &x)?;
            let measure = if a.iid { "iid" } else { "toeplitz" };
            Ok(envelope("sample", a, &json!({ "measure": measure, "len": x.len() })))
        }
        Command::Stats(a) => {
            let x = load(&a.input)?;
            let score = normality_score(&x, a.kmax)?;
            let counts = match a.counts {
                None => Vec::new(),
                Some(mode) => (1..=a.kmax)
                    .map(|k| match mode {
                        Mode::Aligned => aligned_block_freq(&x, k),
                        Mode::Sliding => sliding_block_freq(&x, k),
                    })
                    .collect::<Result<_, _>>()?,
            };
            Ok(envelope("stats", a, &json!({ "len": x.len(), "score": score, "reports": counts })))
        }
        Command::Weyl(a) => {
            let x = load(&a.input)?;
            Ok(envelope("weyl", a, &weyl_sum(&x, a.r, a.h, a.n)?))
        }
        Command::GapScan(a) => {
            let p = PrimeSet::new(&a.primes)?;
            let report = gap_scan(&p, a.bound, a.floor)?;
            let certificate = if a.certify {
                let floor = a.floor.max(1);
                let cert = window_certify(|n| delta(&p, n).expect("in range"), floor, a.bound, |n| (4 * n).isqrt())?;
                Some(cert)
            } else {
                None
            };
            Ok(envelope("gap-scan", a, &json!({ "scan": report, "certificate": certificate })))
        }
        Command::Counterexample(a) => {
            if !(2..=32).contains(&a.levels) {
                return Err(CliError::usage("--levels must lie in 2..=32"));
            }
            let params = CounterexampleParams::new(a.base, a.big_k, a.seed)?;
            let x = counterexample_digits(&params, (1usize << a.levels) - 1)?;
            if let Some(path) = &a.output {
                save(path, &x)?;
            }
            Ok(envelope("counterexample", a, &dyadic_block_report(&x, a.digit, Some(&params))?))
        }
        Command::Condii(a) => {
            let x = load(&a.input)?;
            let text = std::fs::read_to_string(&a.query).map_err(|e| CliError::io(&a.query, e))?;
            let q: CondIIQuery = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", a.query.display())))?;
            let result = condii_estimate(&x, &q, a.p1, a.p2, a.n)?;
            Ok(envelope("condii", a, &json!({ "query": q, "estimate": result })))
        }
        Command::Lemma5(a) => lemma5(a),
        Command::Bounds(b) => match &b.which {
            Bounds::L2(a) => {
                let ell = a.ell.unwrap_or_else(|| minimal_truncation(a.base, a.r, a.h, a.m, a.k));
                let mode = match a.samples {
                    None => L2Mode::Exact,
                    Some(samples) => L2Mode::MonteCarlo { samples, seed: a.seed },
                };
                if a.budget == 0 {
                    return Err(CliError::usage("budget must be positive"));
                }
                let q = L2Query { base: a.base, r: a.r, h: a.h, m: a.m, k: a.k, ell, mode };
                let report = l2_exponential_sum_mu(&q, a.budget)?;
                let per_k2 = report.value / (a.k * a.k) as f64;
                Ok(envelope("bounds l2", b, &json!({ "report": report, "value_over_k2": per_k2 })))
            }
            Bounds::Riesz(a) => {
                let l: BigUint = a
                    .l
                    .parse()
                    .map_err(|_| CliError::usage(format!("--l must be a decimal integer, got {:?}", a.l)))?;
                let reports = a
                    .n
                    .iter()
                    .map(|&n| {
                        riesz_product_sum(&RieszQuery {
                            base: a.base,
                            r: a.r,
                            l: l.clone(),
                            cutoff: a.cutoff,
                            n,
                            tail_tol: a.tail_tol,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let rows: Vec<SweepRow> = reports
                    .iter()
                    .map(|r| SweepRow { scale: r.n as f64, value: r.sum, stderr: None })
                    .collect();
                if a.format == Format::Csv {
                    return Ok(Output::Text(sweep_csv(&rows)));
                }
                let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.scale, r.value)).collect();
                let fit = if pairs.len() >= 3 { Some(exponent_fit(&pairs)?) } else { None };
                Ok(envelope("bounds riesz", b, &json!({ "sums": reports, "fit": fit })))
            }
            Bounds::Mq(a) => {
                let v = m_q(a.base, a.ell, a.q)?;
                let den = v.denominator();
                Ok(envelope(
                    "bounds mq",
                    b,
                    &json!({
                        "numerator": v.numerator.to_string(),
                        "denominator": den.to_string(),
                        "base": v.base,
                        "exponent": v.precision,
                    }),
                ))
            }
        },
    }
}

fn lemma5(a: &crate::Lemma5Args) -> CliResult<Output> {
    if a.windows == 0 {
        return Err(CliError::usage("--windows must be positive"));
    }
    let rs = removal_set(a.p1, a.p2, a.k)?;
    let p = PrimeSet::new(&[a.p1, a.p2])?;
    let need = free_count(&p, rs.i_size * a.windows).max(rs.block_len(a.k, a.k) * a.windows);
    let mut failures = Vec::new();
    for trial in 0..a.trials {
        let x = sample_iid(a.base, need, derive_seed(a.seed, trial))?;
        if let Some(window) = lemma5_check_windows(&x, &rs, a.windows)? {
            failures.push(json!({ "trial": trial, "window": window }));
        }
    }
    Ok(envelope(
        "lemma5",
        a,
        &json!({
            "removal_set": rs,
            "passed": failures.is_empty(),
            "failures": failures,
        }),
    ))
}
