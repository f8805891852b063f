use std::fmt::Write as _;
use std::io::Write as _;

use serde::Serialize;

use robust_wald::data::{self, Target, TwoSampleDataset};
use robust_wald::estimation::{
    fit_mdpde_with, select_beta_with, BetaSelection, FitOptions, MdpdeFit, VarianceKind,
};
use robust_wald::family::{FamilySpec, ParametricFamily};
use robust_wald::record::RunRecord;
use robust_wald::robustness::{self, Pattern, Which};
use robust_wald::sim::{self, SimulationConfig, SimulationReport};
use robust_wald::wald::{
    self, approx_power_fixed, contiguous_power, sample_size_for_power, Difference, FnHypothesis,
    HypothesisFunction, LocalAlternative, NullPoint, TestKind, TestResult, Theta3Rule,
    VarianceRatio,
};

use crate::args::*;
use crate::{usage, Failure};

type Res<T> = Result<T, Failure>;

pub fn dispatch(cmd: Command) -> Res<()> {
    match cmd {
        Command::Test(a) => cmd_test(a),
        Command::Power(a) => cmd_power(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::SelectBeta(a) => cmd_select_beta(a),
        Command::RobustCurve(a) => cmd_robust_curve(a),
    }
}

fn family_spec(f: FamilyArg, sigma: f64) -> FamilySpec {
    match f {
        FamilyArg::NormalKnownSigma => FamilySpec::NormalKnownSigma { sigma },
        FamilyArg::Normal => FamilySpec::Normal,
        FamilyArg::Poisson => FamilySpec::Poisson,
        FamilyArg::Exponential => FamilySpec::Exponential,
    }
}

fn build_family(f: FamilyArg, sigma: f64) -> Res<Box<dyn ParametricFamily>> {
    Ok(family_spec(f, sigma).build()?)
}

fn target(t: TargetArg) -> Target {
    match t {
        TargetArg::Both => Target::Both,
        TargetArg::Sample1 => Target::Sample1,
        TargetArg::Sample2 => Target::Sample2,
    }
}

fn load_data(a: &DataArgs) -> Res<TwoSampleDataset> {
    let mut ds = data::load(&a.data, a.data2.as_deref())?;
    if !a.drop_rows.is_empty() {
        ds.drop_rows(&a.drop_rows, target(a.drop_from))?;
    }
    if !a.append.is_empty() {
        ds.append(&a.append, target(a.append_to));
    }
    Ok(ds)
}

/// min:max:step, inclusive of max up to rounding.
pub fn parse_grid(s: &str) -> Res<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some([lo, hi, step]) if *step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite() => {
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            if count > 10_000_000 {
                return usage(format!("grid {s} has too many points"));
            }
            Ok((0..count)
                .map(|i| {
                    let v = lo + i as f64 * step;
                    (v * 1e12).round() / 1e12
                })
                .collect())
        }
        _ => usage(format!("grid {s:?} must look like min:max:step with step > 0")),
    }
}

/// A hypothesis resolved against a family.
struct Hypothesis {
    test: TestArg,
    psi: Option<Box<dyn HypothesisFunction>>,
}

impl Hypothesis {
    fn kind(&self) -> TestKind<'_> {
        match (self.test, &self.psi) {
            (TestArg::Simple, _) | (_, None) => TestKind::Simple,
            (TestArg::OneSided, Some(p)) => TestKind::OneSided(p.as_ref()),
            (_, Some(p)) => TestKind::Composite(p.as_ref()),
        }
    }
}

fn parse_psi(spec: &str, family: &dyn ParametricFamily) -> Res<Box<dyn HypothesisFunction>> {
    let p = family.dim();
    match spec {
        "diff" => Ok(Box::new(Difference::new(p))),
        "mean-diff" => Ok(Box::new(Difference::coords(p, vec![0]))),
        _ => match spec.strip_prefix("var-ratio:") {
            Some(c) => {
                let c0: f64 = c
                    .parse()
                    .map_err(|_| Failure::Usage(format!("bad ratio in --psi {spec}")))?;
                if family.name() != "normal" {
                    return usage("--psi var-ratio needs --family normal");
                }
                Ok(Box::new(VarianceRatio::normal(c0)))
            }
            None => usage(format!("unknown --psi {spec:?}; use diff, mean-diff or var-ratio:C0")),
        },
    }
}

fn resolve(h: &HypothesisArgs, family: &dyn ParametricFamily) -> Res<Hypothesis> {
    if h.direction.is_some() && h.test != TestArg::OneSided {
        return usage("--direction applies to --test one-sided only");
    }
    let psi: Option<Box<dyn HypothesisFunction>> = match h.test {
        TestArg::Simple => {
            if h.psi.is_some() {
                return usage("--psi is not used by the simple test");
            }
            None
        }
        TestArg::Partial => {
            if family.dim() < 2 {
                return usage(format!(
                    "partial homogeneity needs a nuisance parameter; {} has none",
                    family.name()
                ));
            }
            if h.psi.as_deref().is_some_and(|p| p != "mean-diff") {
                return usage("partial homogeneity compares the means only");
            }
            Some(Box::new(Difference::coords(family.dim(), vec![0])))
        }
        TestArg::Composite => Some(parse_psi(h.psi.as_deref().unwrap_or("diff"), family)?),
        TestArg::OneSided => {
            let spec = h.psi.as_deref().unwrap_or("mean-diff");
            let second = h.direction.unwrap_or(DirectionArg::SecondLarger) == DirectionArg::SecondLarger;
            let psi: Box<dyn HypothesisFunction> = match spec {
                "diff" | "mean-diff" => {
                    if spec == "diff" && family.dim() != 1 {
                        return usage("one-sided tests need a scalar restriction; use mean-diff");
                    }
                    let d = Difference::coords(family.dim(), vec![0]);
                    Box::new(if second { d.reversed() } else { d })
                }
                _ => {
                    let base = parse_psi(spec, family)?;
                    if second {
                        let label = format!("-({})", base.label());
                        Box::new(FnHypothesis::new(1, &label, move |a, b| -base.value(a, b)))
                    } else {
                        base
                    }
                }
            };
            Some(psi)
        }
    };
    Ok(Hypothesis { test: h.test, psi })
}

fn emit(out: &OutputArgs, command: &str, options: impl Serialize, payload: impl Serialize, human: &str) -> Res<()> {
    let mut rec = RunRecord::new(command, options, payload)?;
    if out.timestamp {
        rec = rec.with_timestamp();
    }
    match out.json.as_deref() {
        Some("-") => println!("{}", rec.to_json()),
        Some(path) => {
            print!("{human}");
            write_file(path, &(rec.to_json() + "\n"))?;
        }
        None => print!("{human}"),
    }
    Ok(())
}

fn write_file(path: &str, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{path}: {e}")))
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
}

#[derive(Serialize)]
struct TestPayload {
    dataset: String,
    n: usize,
    m: usize,
    selection: Option<BetaSelection>,
    result: TestResult,
}

fn run_test(
    family: &dyn ParametricFamily,
    hyp: &Hypothesis,
    s1: &robust_wald::estimation::Sample,
    s2: &robust_wald::estimation::Sample,
    beta: f64,
    alpha: f64,
) -> Res<TestResult> {
    Ok(match (hyp.test, hyp.kind()) {
        (TestArg::Partial, _) => wald::partial_homogeneity_test(family, s1, s2, 1, beta, alpha)?,
        (_, TestKind::Simple) => wald::simple_test(family, s1, s2, beta, alpha)?,
        (_, TestKind::Composite(p)) => wald::composite_test(family, s1, s2, p, beta, alpha)?,
        (_, TestKind::OneSided(p)) => wald::one_sided_test(family, s1, s2, p, beta, alpha)?,
    })
}

fn cmd_test(a: TestArgs) -> Res<()> {
    let family = build_family(a.model.family, a.model.sigma)?;
    let hyp = resolve(&a.hypothesis, family.as_ref())?;
    let ds = load_data(&a.data)?;
    let (s1, s2) = ds.samples()?;
    let selection = if a.beta == "auto" {
        let grid = parse_grid(&a.grid)?;
        Some(select_beta_with(family.as_ref(), &s1, &s2, &grid, 1.0)?)
    } else {
        None
    };
    let beta = match &selection {
        Some(s) => s.beta,
        None => a
            .beta
            .parse::<f64>()
            .ok()
            .filter(|b| *b >= 0.0 && b.is_finite())
            .ok_or_else(|| Failure::Usage(format!("--beta must be >= 0 or auto, got {:?}", a.beta)))?,
    };
    let r = run_test(family.as_ref(), &hyp, &s1, &s2, beta, a.alpha)?;
    let mut h = String::new();
    let _ = writeln!(h, "dataset      {} (n = {}, m = {})", ds.name, s1.len(), s2.len());
    let _ = writeln!(h, "family       {}", family.name());
    let _ = writeln!(h, "test         {}", r.test);
    if selection.is_some() {
        let _ = writeln!(h, "beta         {:.3} (selected)", beta);
    } else {
        let _ = writeln!(h, "beta         {:.3}", beta);
    }
    let _ = writeln!(h, "estimate 1   {}", fmt_vec(&r.fit1.theta));
    let _ = writeln!(h, "estimate 2   {}", fmt_vec(&r.fit2.theta));
    let _ = writeln!(h, "statistic    {:.3}", r.statistic);
    let _ = writeln!(h, "p-value      {:.3}", r.p_value);
    let _ = writeln!(h, "critical     {:.3}", r.critical_value);
    let _ = writeln!(
        h,
        "decision     {} at alpha = {:.3}",
        if r.reject { "reject" } else { "do not reject" },
        r.alpha
    );
    let payload = TestPayload {
        dataset: ds.name.clone(),
        n: s1.len(),
        m: s2.len(),
        selection,
        result: r,
    };
    emit(&a.output, "test", &a, payload, &h)
}

const TABLE_BETAS: [f64; 7] = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
const TABLE_ROWS: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 5.0];

#[derive(Serialize)]
struct PowerRow {
    label: f64,
    powers: Vec<f64>,
}

#[derive(Serialize)]
struct PowerTable {
    kind: String,
    row_label: String,
    betas: Vec<f64>,
    rows: Vec<PowerRow>,
}

fn table_text(t: &PowerTable) -> String {
    let mut h = String::new();
    let _ = write!(h, "{:>6}", t.row_label);
    for b in &t.betas {
        let _ = write!(h, " {:>7}", format!("{b}"));
    }
    h.push('\n');
    for r in &t.rows {
        let _ = write!(h, "{:>6}", format!("{}", r.label));
        for p in &r.powers {
            let _ = write!(h, " {:>7.3}", p);
        }
        h.push('\n');
    }
    h
}

fn preset_table(one_sided: bool, alpha: f64) -> Res<PowerTable> {
    let family = robust_wald::family::NormalKnownVar::new(1.0)?;
    let psi = Difference::new(1);
    let kind = if one_sided { TestKind::OneSided(&psi) } else { TestKind::Simple };
    let omega: f64 = 0.5;
    let rows = TABLE_ROWS
        .iter()
        .map(|&w| {
            let alt = LocalAlternative {
                null: NullPoint::common(&[0.0]),
                delta1: vec![w / omega.sqrt()],
                delta2: vec![0.0],
            };
            let powers = TABLE_BETAS
                .iter()
                .map(|&b| contiguous_power(&family, kind, &alt, omega, b, alpha))
                .collect::<robust_wald::Result<Vec<f64>>>()?;
            Ok(PowerRow { label: w, powers })
        })
        .collect::<Res<Vec<_>>>()?;
    Ok(PowerTable {
        kind: if one_sided { "contiguous one-sided, normal mean, sigma = 1" } else { "contiguous two-sided, normal mean, sigma = 1" }.into(),
        row_label: if one_sided { "d" } else { "W" }.into(),
        betas: TABLE_BETAS.to_vec(),
        rows,
    })
}

#[derive(Serialize)]
struct PowerPoint {
    beta: f64,
    value: f64,
}

fn cmd_power(a: PowerArgs) -> Res<()> {
    if a.table1 || a.table2 {
        let t = preset_table(a.table2, a.alpha)?;
        let h = table_text(&t);
        return emit(&a.output, "power", &a, t, &h);
    }
    let Some(fam) = a.family else {
        return usage("power needs --table1, --table2 or --family");
    };
    let family = build_family(fam, a.sigma)?;
    let f = family.as_ref();
    let hyp = resolve(&a.hypothesis, f)?;
    let kind = hyp.kind();
    let rule = match a.theta3.as_str() {
        "linear" => Theta3Rule::Linear,
        "mixture-fit" => Theta3Rule::MixtureFit,
        other => return usage(format!("--theta3 {other:?}: use linear or mixture-fit")),
    };
    if a.theta1.is_empty() {
        return usage("--theta1 is required");
    }
    let theta2 = if a.theta2.is_empty() { a.theta1.clone() } else { a.theta2.clone() };
    let contiguous = !a.delta1.is_empty() || !a.delta2.is_empty();
    let (what, points): (&str, Vec<PowerPoint>) = if let Some(target) = a.target {
        let pts = a
            .beta
            .iter()
            .map(|&b| {
                let n = sample_size_for_power(f, kind, &a.theta1, &theta2, target, a.omega, b, a.alpha, rule)?;
                Ok(PowerPoint { beta: b, value: n as f64 })
            })
            .collect::<Res<Vec<_>>>()?;
        ("total sample size", pts)
    } else if contiguous {
        let zero = vec![0.0; f.dim()];
        let alt = LocalAlternative {
            null: NullPoint { theta1: a.theta1.clone(), theta2: theta2.clone() },
            delta1: if a.delta1.is_empty() { zero.clone() } else { a.delta1.clone() },
            delta2: if a.delta2.is_empty() { zero } else { a.delta2.clone() },
        };
        let pts = a
            .beta
            .iter()
            .map(|&b| Ok(PowerPoint { beta: b, value: contiguous_power(f, kind, &alt, a.omega, b, a.alpha)? }))
            .collect::<Res<Vec<_>>>()?;
        ("contiguous power", pts)
    } else {
        let (Some(n), Some(m)) = (a.n, a.m) else {
            return usage("fixed-alternative power needs --n and --m (or --target, or --delta1/--delta2)");
        };
        let pts = a
            .beta
            .iter()
            .map(|&b| {
                Ok(PowerPoint {
                    beta: b,
                    value: approx_power_fixed(f, kind, &a.theta1, &theta2, n, m, b, a.alpha, rule)?,
                })
            })
            .collect::<Res<Vec<_>>>()?;
        ("approximate power", pts)
    };
    let mut h = format!("{:>6}  {what}\n", "beta");
    for p in &points {
        if a.target.is_some() {
            let _ = writeln!(h, "{:>6}  {}", p.beta, p.value);
        } else {
            let _ = writeln!(h, "{:>6}  {:.3}", p.beta, p.value);
        }
    }
    #[derive(Serialize)]
    struct Payload<'a> {
        quantity: &'a str,
        test: String,
        points: Vec<PowerPoint>,
    }
    let payload = Payload { quantity: what, test: kind.label(), points };
    emit(&a.output, "power", &a, payload, &h)
}

fn cmd_simulate(a: SimulateArgs) -> Res<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Failure::Usage(format!("{}: {e}", a.config)))?;
    let mut config: SimulationConfig =
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.config)))?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(r) = a.replicates {
        config.replicates = r;
    }
    let report: SimulationReport = sim::run(&config)?;
    let mut h = String::new();
    if !report.cells.is_empty() {
        let _ = writeln!(h, "{:>6} {:>6} {:>8} {:>7} {:>7} {:>8}", "beta", "eps", "replaced", "rate", "mc-se", "failures");
        for c in &report.cells {
            let _ = writeln!(
                h,
                "{:>6} {:>6} {:>8} {:>7.3} {:>7.3} {:>8}{}",
                c.beta, c.epsilon, c.replaced, c.rate, c.mc_se, c.failures,
                if c.flagged { "  flagged" } else { "" }
            );
        }
    }
    for t in &report.tuning {
        let _ = writeln!(h, "selected beta, eps = {}: mode {}", t.epsilon, t.mode);
        for (g, c) in t.grid.iter().zip(&t.counts) {
            let _ = writeln!(h, "  {:>5} {:>6}", g, c);
        }
    }
    if let Some(path) = &a.csv {
        let mut csv = String::from("beta,epsilon,sample,replaced,replicates,failures,rejections,rate,mc_se,flagged\n");
        for c in &report.cells {
            let sample = match c.sample {
                Which::First => "first",
                Which::Second => "second",
                Which::Both => "both",
            };
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                c.beta, c.epsilon, sample, c.replaced, c.replicates, c.failures, c.rejections, c.rate, c.mc_se, c.flagged
            );
        }
        write_file(path, &csv)?;
    }
    emit(&a.output, "simulate", &a, report, &h)
}

fn cmd_estimate(a: EstimateArgs) -> Res<()> {
    let family = build_family(a.model.family, a.model.sigma)?;
    let ds = load_data(&a.data)?;
    let (s1, s2) = ds.samples()?;
    let opts = FitOptions {
        variance: if a.sandwich { VarianceKind::Sandwich } else { VarianceKind::Model },
        ..FitOptions::default()
    };
    #[derive(Serialize)]
    struct Row {
        beta: f64,
        fit1: MdpdeFit,
        fit2: MdpdeFit,
    }
    let rows = a
        .beta
        .iter()
        .map(|&b| {
            Ok(Row {
                beta: b,
                fit1: fit_mdpde_with(family.as_ref(), &s1, b, &opts)?,
                fit2: fit_mdpde_with(family.as_ref(), &s2, b, &opts)?,
            })
        })
        .collect::<Res<Vec<_>>>()?;
    let se = |f: &MdpdeFit| -> Vec<f64> {
        (0..f.theta.len()).map(|i| (f.sigma[i][i] / f.n as f64).sqrt()).collect()
    };
    let mut h = format!("{:>6}  {:<28} {:<28}\n", "beta", ds.labels[0], ds.labels[1]);
    for r in &rows {
        let _ = writeln!(
            h,
            "{:>6}  {:<28} {:<28}",
            r.beta,
            format!("{} ({})", fmt_vec(&r.fit1.theta), fmt_vec(&se(&r.fit1))),
            format!("{} ({})", fmt_vec(&r.fit2.theta), fmt_vec(&se(&r.fit2))),
        );
    }
    emit(&a.output, "estimate", &a, rows, &h)
}

fn cmd_select_beta(a: SelectArgs) -> Res<()> {
    let family = build_family(a.model.family, a.model.sigma)?;
    let ds = load_data(&a.data)?;
    let (s1, s2) = ds.samples()?;
    let grid = parse_grid(&a.grid)?;
    let sel = select_beta_with(family.as_ref(), &s1, &s2, &grid, a.pilot)?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "failed".into());
    let mut h = format!("{:>6} {:>12} {:>12} {:>12}\n", "beta", "mse 1", "mse 2", "total");
    for p in &sel.grid {
        let total = p.mse1.zip(p.mse2).map(|(x, y)| x + y);
        let _ = writeln!(h, "{:>6} {:>12} {:>12} {:>12}", p.beta, cell(p.mse1), cell(p.mse2), cell(total));
    }
    let _ = writeln!(
        h,
        "selected beta {} (sample 1 alone {}, sample 2 alone {})",
        sel.beta, sel.beta_sample1, sel.beta_sample2
    );
    emit(&a.output, "select-beta", &a, sel, &h)
}

fn null_point(a: &CurveArgs) -> Res<NullPoint> {
    if !a.theta0.is_empty() {
        if !a.theta1.is_empty() || !a.theta2.is_empty() {
            return usage("give either --theta0 or --theta1/--theta2");
        }
        return Ok(NullPoint::common(&a.theta0));
    }
    if a.theta1.is_empty() {
        return usage("--theta0 (or --theta1) is required");
    }
    let t2 = if a.theta2.is_empty() { a.theta1.clone() } else { a.theta2.clone() };
    Ok(NullPoint { theta1: a.theta1.clone(), theta2: t2 })
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "nan".into()
    }
}

fn cmd_robust_curve(a: CurveArgs) -> Res<()> {
    let family = build_family(a.model.family, a.model.sigma)?;
    let f = family.as_ref();
    let hyp = resolve(&a.hypothesis, f)?;
    let kind = hyp.kind();
    let null = null_point(&a)?;
    let grid = parse_grid(&a.grid)?;
    let which = match a.pattern {
        PatternArg::S1 => Which::First,
        PatternArg::S2 => Which::Second,
        PatternArg::Both => Which::Both,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if a.curve == CurveArg::Ges {
        for &b in &grid {
            let s = robustness::gross_error_sensitivity(f, kind, &null, a.omega, b, which)?;
            rows.push(vec![b, s.value]);
        }
    } else {
        let support = f.support();
        let mut patterns = Vec::new();
        match which {
            Which::First => patterns.extend(grid.iter().filter(|x| support.contains(**x)).map(|&x| Pattern::First { x })),
            Which::Second => patterns.extend(grid.iter().filter(|y| support.contains(**y)).map(|&y| Pattern::Second { y })),
            Which::Both => {
                let ygrid = match &a.ygrid {
                    Some(g) => parse_grid(g)?,
                    None => grid.clone(),
                };
                for &x in grid.iter().filter(|x| support.contains(**x)) {
                    for &y in ygrid.iter().filter(|y| support.contains(**y)) {
                        patterns.push(Pattern::Both { x, y });
                    }
                }
            }
        }
        if patterns.is_empty() {
            return usage("no grid point lies in the support of the family");
        }
        let values = match a.curve {
            CurveArg::If1 | CurveArg::If2 => {
                let order = if a.curve == CurveArg::If1 { 1 } else { 2 };
                robustness::test_if_curve(f, kind, &null, a.omega, a.beta, order, &patterns)?
            }
            _ => {
                let zero = vec![0.0; f.dim()];
                let pick = |d: &Vec<f64>| if d.is_empty() || a.curve == CurveArg::Lif { zero.clone() } else { d.clone() };
                let alt = LocalAlternative { null: null.clone(), delta1: pick(&a.delta1), delta2: pick(&a.delta2) };
                robustness::pif_curve(f, kind, &alt, a.omega, a.beta, a.alpha, &patterns)?
            }
        };
        for (p, v) in patterns.iter().zip(values) {
            rows.push(match *p {
                Pattern::First { x } => vec![x, v],
                Pattern::Second { y } => vec![y, v],
                Pattern::Both { x, y } => vec![x, y, v],
            });
        }
    }
    let header = match (a.curve, which) {
        (CurveArg::Ges, _) => "beta,value",
        (_, Which::Both) => "x,y,value",
        (_, Which::Second) => "y,value",
        _ => "x,value",
    };
    let mut csv = String::with_capacity(rows.len() * 24);
    csv.push_str(header);
    csv.push('\n');
    for r in &rows {
        let line: Vec<String> = r.iter().map(|v| fmt_num(*v)).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    #[derive(Serialize)]
    struct Payload<'a> {
        curve: CurveArg,
        pattern: PatternArg,
        test: String,
        columns: Vec<&'a str>,
        rows: Vec<Vec<f64>>,
    }
    let human = match &a.out {
        Some(path) => {
            write_file(path, &csv)?;
            format!("wrote {} rows to {path}\n", rows.len())
        }
        None => csv,
    };
    let payload = Payload {
        curve: a.curve,
        pattern: a.pattern,
        test: kind.label(),
        columns: header.split(',').collect(),
        rows,
    };
    if a.output.json.is_none() {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(human.as_bytes());
        return Ok(());
    }
    emit(&a.output, "robust-curve", &a, payload, &human)
}

#[cfg(test)]
mod tests {
    use super::*;
    use robust_wald::family::{NormalFull, Poisson};

    fn hyp(test: TestArg, psi: Option<&str>, direction: Option<DirectionArg>) -> HypothesisArgs {
        HypothesisArgs { test, psi: psi.map(String::from), direction }
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_grid("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        for bad in ["0:1", "1:0:0.1", "0:1:0", "a:b:c", "0:1:-1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn hypothesis_resolution() {
        let p = Poisson;
        assert!(resolve(&hyp(TestArg::Simple, Some("diff"), None), &p).is_err());
        assert!(resolve(&hyp(TestArg::Partial, None, None), &p).is_err());
        assert!(resolve(&hyp(TestArg::Simple, None, Some(DirectionArg::FirstLarger)), &p).is_err());
        assert!(resolve(&hyp(TestArg::Composite, Some("var-ratio:1"), None), &p).is_err());
        assert!(resolve(&hyp(TestArg::Composite, Some("nonsense"), None), &p).is_err());

        // second-larger is the default: psi = theta2 - theta1
        let h = resolve(&hyp(TestArg::OneSided, None, None), &p).unwrap();
        assert_eq!(h.psi.as_ref().unwrap().value(&[1.0], &[3.0])[0], 2.0);
        let h = resolve(&hyp(TestArg::OneSided, None, Some(DirectionArg::FirstLarger)), &p).unwrap();
        assert_eq!(h.psi.as_ref().unwrap().value(&[1.0], &[3.0])[0], -2.0);

        let n = NormalFull;
        let h = resolve(&hyp(TestArg::Partial, None, None), &n).unwrap();
        assert_eq!(h.psi.as_ref().unwrap().value(&[1.0, 2.0], &[0.5, 7.0]).len(), 1);
        let up = resolve(&hyp(TestArg::OneSided, Some("var-ratio:1"), None), &n).unwrap();
        let down = resolve(&hyp(TestArg::OneSided, Some("var-ratio:1"), Some(DirectionArg::FirstLarger)), &n).unwrap();
        let (a, b) = ([0.0, 2.0], [0.0, 1.0]);
        let u = up.psi.as_ref().unwrap().value(&a, &b)[0];
        let d = down.psi.as_ref().unwrap().value(&a, &b)[0];
        assert_eq!(u, -d);
        assert!(d != 0.0);
    }

    #[test]
    fn non_finite_values_are_spelled_out() {
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(0.5), "0.5");
    }
}
