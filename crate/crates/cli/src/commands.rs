use bstoeplitz_core::check::{CLOSED_FORM_TOLERANCE, TRUNCATED_TOLERANCE};
use bstoeplitz_core::{
    build_rep, critical_limit_state, critical_state, ground_state, kms_state, phase_feasible, psi_bt, quads,
    recover_moments, verify_charkms, verify_full_kms, verify_ground, word_ball, BigUint, CheckReport, Complex64,
    GroundSpec, InducedModel, JoinResult, Measure, PWord, Params, SpanState, TruncatedKms, WSpec,
};
use serde_json::{json, Map, Value};

use crate::render::{complex_value, num_value, Output, Table};
use crate::{corpus, measure_file, Cli, CliError, Command, Mode, StateChoice, VerifyArgs, Which};
use crate::{EXIT_DOMAIN, EXIT_OK, EXIT_VERIFY_FAILED};

/// Tolerance for operator identities in truncated representations.
const RELATION_TOLERANCE: f64 = 1e-12;
/// Tolerance for the moment round trip.
const RECOVERY_TOLERANCE: f64 = 1e-9;
/// Witnesses listed in a verifier report.
const SHOWN_WITNESSES: usize = 20;

type Outcome = Result<(Output, u8), CliError>;

pub(crate) fn dispatch(cli: &Cli) -> Outcome {
    let params = Params::new(cli.c, cli.d)?;
    match &cli.command {
        Command::Normalize { words, file } => {
            let mut inputs: Vec<String> = words.clone();
            if let Some(path) = file {
                inputs.extend(corpus::read(path)?.into_iter().map(|(_, w)| w));
            }
            normalize(&params, &inputs)
        }
        Command::Stem { words } => stem(&params, words),
        Command::Join { x, y } => join(&params, x, y),
        Command::KmsEval { beta, measure, x, y, series } => kms_eval(&params, beta, measure.as_deref(), x, y, *series),
        Command::PhaseScan { betas, measure, t } => phase_scan(&params, betas, measure.as_deref(), t),
        Command::Verify(args) => verify(&params, args),
        Command::DemoNonuniqueness { tmax } => demo_nonuniqueness(&params, *tmax),
        Command::RecoverMoments { beta, measure, n_max } => recover(&params, beta, measure.as_deref(), *n_max),
        Command::DumpMatrices { levels, measure, shift_dim, which } => {
            dump_matrices(&params, *levels, measure.as_deref(), *shift_dim, *which)
        }
    }
}

fn word(params: &Params, text: &str) -> Result<PWord, CliError> {
    params.parse_word(text).map_err(|e| CliError::usage(format!("in word {text:?}: {e}")))
}

fn measure_or_default(spec: Option<&str>) -> Result<Measure, CliError> {
    spec.map_or(Ok(Measure::dirac_one()), measure_file::load)
}

/// A number, `lnN`, or `lnN+x` / `lnN-x`.
pub fn parse_beta(text: &str) -> Result<f64, CliError> {
    let s = text.trim();
    let bad = || CliError::usage(format!("cannot read inverse temperature {text:?}"));
    let Some(rest) = s.strip_prefix("ln") else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let split = rest.find(['+', '-']).unwrap_or(rest.len());
    let (arg, offset) = rest.split_at(split);
    let arg: f64 = arg.trim().parse().map_err(|_| bad())?;
    if arg <= 0.0 {
        return Err(bad());
    }
    let offset = match offset.trim() {
        "" => 0.0,
        o => o.replace(' ', "").parse::<f64>().map_err(|_| bad())?,
    };
    Ok(libm::log(arg) + offset)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::usage(format!("cannot read {what} {s:?}"))))
        .collect()
}

/// Comma-separated reals or `re:im` pairs.
fn parse_vector(text: &str) -> Result<Vec<Complex64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let bad = || CliError::usage(format!("cannot read vector coordinate {s:?}"));
            match s.split_once(':') {
                Some((re, im)) => Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?)),
                None => Ok(Complex64::new(s.parse().map_err(|_| bad())?, 0.0)),
            }
        })
        .collect()
}

fn word_fields(w: &PWord) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("word".into(), w.to_string().into());
    m.insert("stem_exponents".into(), json!(w.stem_exps()));
    m.insert("tail".into(), w.tail().to_string().into());
    m.insert("height".into(), w.height().into());
    m
}

fn normalize(params: &Params, inputs: &[String]) -> Outcome {
    if inputs.is_empty() {
        return Err(CliError::usage("no words given"));
    }
    let words = inputs.iter().map(|s| word(params, s)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Output::default();
    if let [w] = words.as_slice() {
        out.fields = word_fields(w);
    } else {
        let mut table = Table::new(&["input", "word", "stem_exponents", "tail", "height"]);
        for (input, w) in inputs.iter().zip(&words) {
            let f = word_fields(w);
            table.push(vec![
                input.as_str().into(),
                f["word"].clone(),
                f["stem_exponents"].clone(),
                f["tail"].clone(),
                f["height"].clone(),
            ]);
        }
        out.table = Some(table);
    }
    Ok((out, EXIT_OK))
}

fn stem(params: &Params, inputs: &[String]) -> Outcome {
    let mut table = Table::new(&["word", "stem", "tail", "height"]);
    for s in inputs {
        let w = word(params, s)?;
        table.push(vec![
            w.to_string().into(),
            w.stem().to_string().into(),
            w.tail().to_string().into(),
            w.height().into(),
        ]);
    }
    let mut out = Output::default();
    if let [row] = table.rows.as_slice() {
        for (k, v) in table.columns.iter().zip(row) {
            out.field(k, v.clone());
        }
    } else {
        out.table = Some(table);
    }
    Ok((out, EXIT_OK))
}

fn join(params: &Params, x: &str, y: &str) -> Outcome {
    let (wx, wy) = (word(params, x)?, word(params, y)?);
    let mut out = Output::default();
    out.field("x", wx.to_string()).field("y", wy.to_string());
    match params.join(&wx, &wy) {
        JoinResult::Finite { join, x_comp, y_comp } => {
            out.field("join", join.to_string()).field("x_comp", x_comp.to_string()).field("y_comp", y_comp.to_string());
        }
        JoinResult::Infinite => {
            out.field("join", "infinite");
        }
    }
    Ok((out, EXIT_OK))
}

fn kms_eval(params: &Params, beta: &str, measure: Option<&str>, x: &str, y: &str, series: bool) -> Outcome {
    let beta = parse_beta(beta)?;
    let (wx, wy) = (word(params, x)?, word(params, y)?);
    let mu = measure_or_default(measure)?;
    let state = kms_state(params, beta, mu)?;
    let mut out = Output::default();
    out.field("x", wx.to_string()).field("y", wy.to_string()).field("beta", num_value(beta));
    out.field("value", complex_value(state.eval(&wx, &wy)));
    if series {
        if wx.stem_exps() != wy.stem_exps() {
            out.field("series", "none: the stems differ, so the value is 0");
        } else {
            let conjugated = wx.tail() < wy.tail();
            let t = if conjugated { wy.tail() - wx.tail() } else { wx.tail() - wy.tail() };
            let scale = libm::exp(-beta * wx.height() as f64);
            let s = state.series(&t);
            out.field("t", t.to_string()).field("conjugated", conjugated).field("scale", num_value(scale));
            let terms: Vec<Value> = s
                .terms
                .iter()
                .map(|term| {
                    json!({
                        "k": term.k,
                        "exponent": term.exponent.to_string(),
                        "weight": num_value(term.weight),
                        "moment": complex_value(term.moment),
                        "term": complex_value(term.value()),
                    })
                })
                .collect();
            out.field("terms", terms).field("tail_bound", num_value(s.tail_bound));
        }
    }
    Ok((out, EXIT_OK))
}

fn phase_scan(params: &Params, betas: &str, measure: Option<&str>, ts: &str) -> Outcome {
    let betas =
        betas.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_beta).collect::<Result<Vec<_>, _>>()?;
    let ts: Vec<u64> = parse_list(ts, "exponent")?;
    let mu = measure_or_default(measure)?;
    let mut columns = vec!["beta".to_string(), "feasible".into(), "slack".into()];
    for t in &ts {
        columns.push(format!("psi_re_{t}"));
        columns.push(format!("psi_im_{t}"));
    }
    let mut table = Table { columns, rows: Vec::new() };
    for beta in betas {
        let (feasible, slack) = phase_feasible(params, beta);
        let mut row = vec![num_value(beta), feasible.into(), num_value(slack)];
        for t in &ts {
            let t = BigUint::from(*t);
            let value = if beta > params.critical_beta() {
                Some(psi_bt(params, beta, &mu, &t)?)
            } else if feasible && !params.d_divides_c() {
                // at ln d the closed formula gives the only state
                Some(critical_state(params).eval_bt(&t))
            } else {
                None
            };
            match value {
                Some(z) => row.extend([num_value(z.re), num_value(z.im)]),
                None => row.extend([Value::Null, Value::Null]),
            }
        }
        table.push(row);
    }
    let out = Output { table: Some(table), ..Output::default() };
    Ok((out, EXIT_OK))
}

fn report_output(report: &CheckReport, out: &mut Output) -> u8 {
    out.field("pairs_checked", report.pairs_checked)
        .field("quads_checked", report.quads_checked)
        .field("max_residual", num_value(report.max_residual))
        .field("tolerance", num_value(report.tolerance))
        .field("failures", report.failures.len())
        .field("passed", report.passed());
    if !report.failures.is_empty() {
        let witnesses: Vec<Value> = report
            .failures
            .iter()
            .take(SHOWN_WITNESSES)
            .map(|f| {
                let w: Vec<String> = f.witness.iter().map(ToString::to_string).collect();
                json!({ "witness": format!("({})", w.join(", ")), "lhs": complex_value(f.lhs), "rhs": complex_value(f.rhs) })
            })
            .collect();
        out.field("witnesses", witnesses);
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn required_beta(args: &VerifyArgs) -> Result<f64, CliError> {
    args.beta.as_deref().map(parse_beta).transpose()?.ok_or_else(|| CliError::usage("this state needs --beta"))
}

/// Truncation depth that puts the omitted tail of the series below `tol / 10` for words up to `hmax`.
fn truncation_for(params: &Params, beta: f64, hmax: usize, tol: f64) -> usize {
    let q = libm::exp(-beta) * params.d() as f64;
    if !(q > 0.0 && q < 1.0) {
        return hmax;
    }
    let extra = libm::ceil(libm::log(tol * (1.0 - q) / 10.0) / libm::log(q)).max(0.0) as usize;
    hmax + extra
}

fn build_state(params: &Params, args: &VerifyArgs, tol: f64) -> Result<(Box<dyn SpanState>, f64), CliError> {
    let mu = || measure_or_default(args.measure.as_deref());
    Ok(match args.state {
        StateChoice::Kms => {
            let beta = required_beta(args)?;
            (Box::new(kms_state(params, beta, mu()?)?), beta)
        }
        StateChoice::KmsTruncated => {
            let beta = required_beta(args)?;
            let (w, h) = WSpec::from_measure(&mu()?)?;
            // full checks multiply words, so leave room for twice the ball height
            let levels = args.levels.max(truncation_for(params, beta, 2 * args.hmax, tol));
            let model = InducedModel::new(params, levels, w);
            (Box::new(TruncatedKms::new(model, beta, h)?), beta)
        }
        StateChoice::Critical => (Box::new(critical_state(params)), params.critical_beta()),
        StateChoice::CriticalLimit => (Box::new(critical_limit_state(params, mu()?)?), params.critical_beta()),
        StateChoice::GroundVector => {
            (Box::new(ground_state(GroundSpec::vector(parse_vector(&args.xi)?)?)), f64::INFINITY)
        }
        StateChoice::GroundMeasure => (Box::new(ground_state(GroundSpec::MeasureState(mu()?))), f64::INFINITY),
    })
}

fn verify(params: &Params, args: &VerifyArgs) -> Outcome {
    let mut out = Output::default();
    out.field("mode", format!("{:?}", args.mode).to_lowercase());
    if args.mode == Mode::Relations {
        let tol = args.tol.unwrap_or(RELATION_TOLERANCE);
        let w = match args.shift_dim {
            Some(dim) => WSpec::shift(dim)?,
            None => WSpec::from_measure(&measure_or_default(args.measure.as_deref())?)?.0,
        };
        let rep = build_rep(params, args.levels, w)?;
        let report = rep.check_relations(tol);
        out.field("levels", args.levels).field("dim", rep.dim());
        let checks: Vec<Value> = report
            .checks
            .iter()
            .map(|c| {
                json!({
                    "identity": c.name,
                    "columns_checked": c.columns_checked,
                    "excluded": c.excluded.len(),
                    "max_residual": num_value(c.max_residual),
                })
            })
            .collect();
        out.field("checks", checks)
            .field("max_residual", num_value(report.max_residual()))
            .field("tolerance", num_value(tol))
            .field("passed", report.passed());
        let code = if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED };
        return Ok((out, code));
    }
    let default_tol = if args.state == StateChoice::KmsTruncated { TRUNCATED_TOLERANCE } else { CLOSED_FORM_TOLERANCE };
    let tol = args.tol.unwrap_or(default_tol);
    let (state, beta) = build_state(params, args, tol)?;
    let ball = word_ball(params, args.hmax, args.emax)?;
    out.field("state", format!("{:?}", args.state).to_lowercase())
        .field("beta", num_value(beta))
        .field("ball", ball.len());
    let report = match args.mode {
        Mode::Charkms => verify_charkms(state.as_ref(), params, beta, &ball, tol),
        Mode::Full => {
            let qs = quads(&ball, args.quads, args.seed);
            out.field("seed", args.seed);
            verify_full_kms(state.as_ref(), params, beta, &qs, tol)
        }
        Mode::Ground => verify_ground(state.as_ref(), &ball, tol),
        Mode::Relations => unreachable!("handled above"),
    };
    let code = report_output(&report, &mut out);
    Ok((out, code))
}

fn demo_nonuniqueness(params: &Params, tmax: u64) -> Outcome {
    if !params.d_divides_c() {
        return Err(CliError {
            code: EXIT_DOMAIN,
            message: format!(
                "the state at beta = ln d is unique unless d divides c (c={}, d={})",
                params.c(),
                params.d()
            ),
        });
    }
    let a = critical_state(params);
    let order = params.c() / params.d();
    let b = critical_limit_state(params, Measure::roots_uniform(order)?)?;
    let mut out = Output::default();
    out.field("beta", num_value(params.critical_beta())).field("state_a", "delta_{x,y} d^-height(x)").field(
        "state_b",
        format!("limit at ln d of the states of the uniform measure on the roots of unity of order {order}"),
    );
    let mut table = Table::new(&["t", "state_a", "state_b", "difference"]);
    let mut differ = Vec::new();
    for t in 0..=tmax {
        let tb = BigUint::from(t);
        let (va, vb) = (a.eval_bt(&tb), b.eval_bt(&tb));
        let diff = (va - vb).norm();
        if diff > CLOSED_FORM_TOLERANCE {
            differ.push(t);
        }
        table.push(vec![t.into(), complex_value(va), complex_value(vb), num_value(diff)]);
    }
    out.field("differ_at", json!(differ));
    out.table = Some(table);
    Ok((out, EXIT_OK))
}

fn recover(params: &Params, beta: &str, measure: Option<&str>, n_max: u64) -> Outcome {
    let beta = parse_beta(beta)?;
    let mu = measure_or_default(measure)?;
    if params.d_divides_c() {
        return Err(bstoeplitz_core::Error::RequiresDNotDividesC { c: params.c(), d: params.d() }.into());
    }
    let state = kms_state(params, beta, mu.clone())?;
    let recovered = recover_moments(&state, params, beta, n_max)?;
    let mut table = Table::new(&["n", "true", "recovered", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for (n, m) in recovered.iter().enumerate() {
        let truth = mu.moment(&BigUint::from(n));
        let diff = (truth - m).norm();
        worst = if diff.is_nan() { f64::INFINITY } else { worst.max(diff) };
        table.push(vec![n.into(), complex_value(truth), complex_value(*m), num_value(diff)]);
    }
    let mut out = Output::default();
    let passed = worst <= RECOVERY_TOLERANCE;
    out.field("beta", num_value(beta))
        .field("max_abs_diff", num_value(worst))
        .field("tolerance", num_value(RECOVERY_TOLERANCE))
        .field("passed", passed);
    out.table = Some(table);
    Ok((out, if passed { EXIT_OK } else { EXIT_VERIFY_FAILED }))
}

fn dump_matrices(
    params: &Params,
    levels: usize,
    measure: Option<&str>,
    shift_dim: Option<usize>,
    which: Which,
) -> Outcome {
    let w = match shift_dim {
        Some(dim) => WSpec::shift(dim)?,
        None => WSpec::from_measure(&measure_or_default(measure)?)?.0,
    };
    let rep = build_rep(params, levels, w)?;
    let mut table = Table::new(&["matrix", "row", "col", "re", "im"]);
    let mut text = String::new();
    let chosen: Vec<(&str, _)> = match which {
        Which::U => vec![("U", rep.u())],
        Which::V => vec![("V", rep.v())],
        Which::Both => vec![("U", rep.u()), ("V", rep.v())],
    };
    for (name, m) in chosen {
        text.push_str(&format!("# {name} dim {} nnz {}\n", m.nrows(), m.nnz()));
        for (i, j, z) in m.entries() {
            let (re, im) = (crate::render::num(z.re), crate::render::num(z.im));
            text.push_str(&format!("{i} {j} {re} {im}\n"));
            table.push(vec![name.into(), i.into(), j.into(), num_value(z.re), num_value(z.im)]);
        }
    }
    let mut out = Output::default();
    out.field("levels", levels).field("dim", rep.dim());
    out.table = Some(table);
    out.plain_override = Some(text);
    Ok((out, EXIT_OK))
}
