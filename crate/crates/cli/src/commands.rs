//! One function per subcommand; each returns a JSON (or CSV) body.

use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};

use permspread::ak::{ak_size_bounds, ak_size_exact};
use permspread::analysis::{bound_w_k_refined, choose_r, good_tuple_search, member_profile, TupleSearch};
use permspread::approximation::{spread_approximation, ApproximationConfig};
use permspread::estimates::{f_argmax_j0, sum_f_ratio};
use permspread::exact::{format_rational, parse_rational};
use permspread::peeling::{cor_bound_w_k, peel, rough_bound_w_k, simplify_logged, SimplifyOrder};
use permspread::search::verify_conjecture;
use permspread::spread::{is_r_spread, is_r_t_spread, spread_lemma_estimate, RandomSubsetSpec};
use permspread::{Error, Exec, Family, Result};

use crate::Command;

pub enum Body {
    Json(Value),
    Csv(String),
}

impl Body {
    /// Pretty JSON (with `seconds` appended when timing) or the CSV text.
    pub fn render(self, seconds: Option<f64>) -> String {
        match self {
            Body::Json(mut v) => {
                if let (Some(s), Some(obj)) = (seconds, v.as_object_mut()) {
                    obj.insert("seconds".into(), json!(s));
                }
                serde_json::to_string_pretty(&v).expect("values serialize") + "\n"
            }
            Body::Csv(text) => text,
        }
    }
}

pub struct Output {
    pub body: Body,
    /// A search ran out of budget; the command exits with code 2.
    pub incomplete: bool,
}

impl Output {
    fn json(v: Value) -> Self {
        Output {
            body: Body::Json(v),
            incomplete: false,
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn load(path: &Path) -> Result<(Family, Option<usize>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Family::from_json(&text)
}

fn resolve_t(flag: Option<usize>, file: Option<usize>) -> Result<usize> {
    flag.or(file)
        .ok_or_else(|| Error::Precondition("t is neither given with --t nor stored in the input".into()))
}

fn parse_t_range(s: &str, n: usize) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("t range {s:?} is not MIN..MAX"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let t = s.trim().parse().map_err(|_| bad())?;
            (t, t)
        }
    };
    if lo == 0 || lo > hi || hi > n {
        return Err(Error::OutOfRange(format!("t range {lo}..{hi} must lie in 1..{n}")));
    }
    Ok((lo, hi))
}

pub fn run(cmd: Command) -> Result<Output> {
    let exec = Exec::default();
    match cmd {
        Command::AkSize { n, t, k, bounds, .. } => {
            if bounds {
                let b = ak_size_bounds(n, t, k)?;
                Ok(Output::json(json!({
                    "n": n, "t": t, "k": k,
                    "lower": b.lower.to_string(),
                    "upper": b.upper.to_string(),
                })))
            } else {
                let v = ak_size_exact(n, t, k)?;
                Ok(Output::json(json!({ "n": n, "t": t, "k": k, "value": v.to_string() })))
            }
        }
        Command::BoundsReport { n, t, eps, csv } => bounds_report(n, t, &eps, csv),
        Command::MaxFamily {
            n,
            t,
            budget,
            all_optima,
        } => {
            let report = verify_conjecture(n, t, budget, all_optima, exec)?;
            let incomplete = !report.result.optimal;
            Ok(Output {
                body: Body::Json(to_value(&report)),
                incomplete,
            })
        }
        Command::VerifyConjecture { n, t_range, budget } => {
            let (lo, hi) = match t_range {
                Some(s) => parse_t_range(&s, n)?,
                None => (1, n),
            };
            let reports = (lo..=hi)
                .map(|t| verify_conjecture(n, t, budget, true, exec))
                .collect::<Result<Vec<_>>>()?;
            let incomplete = reports.iter().any(|r| !r.result.optimal);
            let all_equal = reports.iter().all(|r| r.result.equal);
            Ok(Output {
                body: Body::Json(json!({ "n": n, "all_equal": all_equal, "results": to_value(&reports) })),
                incomplete,
            })
        }
        Command::Peel { input, q, t } => {
            let (f, file_t) = load(&input)?;
            let t = resolve_t(t, file_t)?;
            let q = q.unwrap_or_else(|| f.max_member_size().max(t));
            let res = peel(&f, t, q)?;
            let layers: Vec<Value> = (0..=res.top())
                .map(|k| {
                    json!({
                        "k": k,
                        "t_layer": to_value(&res.t_layer(k).to_file(Some(t))),
                        "w": to_value(&res.w(k).to_file(Some(t))),
                    })
                })
                .collect();
            Ok(Output::json(json!({
                "n": f.n(), "t": t, "q": q,
                "layers": layers,
                "edits": res.provenance.len(),
            })))
        }
        Command::Simplify { input, t } => {
            let (f, file_t) = load(&input)?;
            let t = resolve_t(t, file_t)?;
            let s = simplify_logged(&f, t, SimplifyOrder::Canonical)?;
            let file = s.family.to_file(Some(t));
            Ok(Output::json(json!({
                "n": file.n, "t": file.t, "sets": file.sets,
                "edits": to_value(&s.edits),
            })))
        }
        Command::SpreadCheck { input, r, t, budget } => {
            let (f, _) = load(&input)?;
            let r = parse_rational(&r)?;
            let body = match t {
                Some(t) => to_value(&is_r_t_spread(&f, &r, t, budget)?),
                None => to_value(&is_r_spread(&f, &r, budget)?),
            };
            Ok(Output::json(body))
        }
        Command::SpreadApprox {
            input,
            t,
            q,
            r,
            threshold,
            seed,
        } => {
            let (f, _) = load(&input)?;
            let mut cfg = ApproximationConfig::new(q, parse_rational(&r)?);
            cfg.residual_threshold =
                BigUint::from_str(&threshold).map_err(|_| Error::Parse(format!("threshold {threshold:?}")))?;
            let a = spread_approximation(&f, t, &cfg, None)?;
            Ok(Output::json(json!({
                "t": t, "q": q, "r": format_rational(&cfg.r), "seed": seed,
                "pieces": to_value(&a.pieces.to_file(Some(t))),
                "residual": to_value(&a.residual.to_file(Some(t))),
                "rounds": to_value(&a.rounds_log),
                "termination": to_value(&a.termination),
                "t_intersecting": a.t_intersecting,
            })))
        }
        Command::GoodTuple {
            input,
            t,
            k,
            r,
            exhaustive,
        } => {
            let (w, _) = load(&input)?;
            let how = if exhaustive {
                TupleSearch::Exhaustive
            } else {
                TupleSearch::BranchAndBound
            };
            let gt = good_tuple_search(&w, t, k, r, how, exec)?;
            let profiles = w.iter().map(|b| member_profile(b, &gt)).collect::<Result<Vec<_>>>()?;
            let all_hold = profiles.iter().all(|p| p.holds_all());
            Ok(Output::json(json!({
                "tuple": to_value(&gt),
                "profiles": to_value(&profiles),
                "all_profiles_hold": all_hold,
            })))
        }
        Command::SpreadLemma {
            input,
            p,
            trials,
            seed,
            r,
            m,
        } => {
            let (f, _) = load(&input)?;
            let spec = RandomSubsetSpec::new(parse_rational(&p)?, seed)?;
            let est = spread_lemma_estimate(&f, &spec, trials, &parse_rational(&r)?, m, exec)?;
            let mut v = to_value(&est);
            v["within_three_sigma"] = json!(est.within_three_sigma());
            Ok(Output::json(v))
        }
    }
}

fn bounds_report(n: usize, t: usize, eps: &str, csv: bool) -> Result<Output> {
    let eps = parse_rational(eps)?;
    let tuple_r = choose_r(&eps)?;
    if t > n {
        return Err(Error::OutOfRange(format!("t = {t} exceeds n = {n}")));
    }
    let (tt, u) = (t as u64, (n - t) as u64);
    let mut rows = Vec::new();
    for k in 0..=(n - t) / 2 {
        let exact = ak_size_exact(n, t, k)?;
        let b = ak_size_bounds(n, t, k)?;
        let kk = k as u64;
        let rough = (k >= 1).then(|| rough_bound_w_k(tt, kk).to_string());
        let cor = cor_bound_w_k(tt, kk).ok().map(|x| format_rational(&x));
        let refined = if k >= 1 {
            bound_w_k_refined(t, k, tuple_r).ok()
        } else {
            None
        };
        rows.push(json!({
            "k": k,
            "ak_exact": exact.to_string(),
            "ak_lower": b.lower.to_string(),
            "ak_upper": b.upper.to_string(),
            "rough_w_k": rough,
            "cor_w_k": cor,
            "refined_w_k": refined.as_ref().map(|g| g.value.to_string()),
            "refined_ratio": refined.as_ref().map(|g| g.ratio_to_binom_t_k),
        }));
    }
    if csv {
        let mut text = String::from("k,ak_exact,ak_lower,ak_upper,rough_w_k,cor_w_k,refined_w_k\n");
        for r in &rows {
            let cell = |key: &str| match &r[key] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            };
            let line = [
                "k",
                "ak_exact",
                "ak_lower",
                "ak_upper",
                "rough_w_k",
                "cor_w_k",
                "refined_w_k",
            ]
            .iter()
            .map(|k| cell(k))
            .collect::<Vec<_>>()
            .join(",");
            text.push_str(&line);
            text.push('\n');
        }
        return Ok(Output {
            body: Body::Csv(text),
            incomplete: false,
        });
    }
    let argmax = f_argmax_j0(tt, u).ok().map(|a| a.j0);
    let sum_ratio = sum_f_ratio(tt, u).ok();
    Ok(Output::json(json!({
        "n": n, "t": t,
        "eps": format_rational(&eps),
        "tuple_r": tuple_r,
        "rows": rows,
        "argmax_j0": argmax,
        "sum_ratio": sum_ratio.as_ref().map(to_value),
    })))
}
