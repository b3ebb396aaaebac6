use gibbsgap::{
    dual_identities, empirical_risk, empirical_sensitivity, expected_loss, gamma_sup, gap_decomposition_general,
    gap_decomposition_pz, gibbs_audit, gibbs_posterior, kl_divergence, model_marginal, run_suite,
    sensitivity_closed_form, solve_beta, tilt, type_of, DiscreteMeasure, InstanceSpec, VerificationSummary,
    WorstCaseTilt,
};
use serde::Serialize;

use crate::args::{DecomposeArgs, GapArgs, GibbsAuditArgs, SolveBetaArgs, Temperature, TiltArgs, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::files::{load_dataset, parse_weights, require_dominated, resolve, resolve_reference, Inputs, Instance};
use crate::report::{reals, Real, SensitivityOut, TiltOut};

/// What a command produced: its result and, for `verify`, a failure to
/// report after the result has been written.
pub struct Outcome<T: Serialize> {
    pub inputs: Inputs,
    pub result: T,
    pub failure: Option<CliError>,
}

fn done<T: Serialize>(inputs: Inputs, result: T) -> CliResult<Outcome<T>> {
    Ok(Outcome {
        inputs,
        result,
        failure: None,
    })
}

fn temperature(
    t: &Temperature,
    inst: &Instance,
    model: usize,
    reference: &DiscreteMeasure,
) -> CliResult<WorstCaseTilt> {
    let alphabet = Some(inst.alphabet().as_ref());
    match (t.beta, t.gamma) {
        (Some(beta), _) => tilt(&inst.lm, model, reference, beta)
            .map_err(|e| CliError::from_core(&format!("{}: --beta", inst.path), e, alphabet)),
        (None, Some(gamma)) => solve_beta(&inst.lm, model, reference, gamma)
            .map_err(|e| CliError::from_core(&format!("{}: --gamma", inst.path), e, alphabet)),
        (None, None) => Err(CliError::input("one of --beta or --gamma is required")),
    }
}

#[derive(Serialize)]
pub struct SolveBetaOut {
    pub alphabet: Vec<String>,
    pub gamma_requested: Real,
    pub gamma_sup: Real,
    pub tilt: TiltOut,
}

pub fn solve_beta_cmd(a: &SolveBetaArgs) -> CliResult<Outcome<SolveBetaOut>> {
    let mut inputs = Inputs::default();
    let inst = Instance::load(&mut inputs, &a.common.instance)?;
    let (model, label) = inst.model_index(a.common.model.as_deref())?;
    let reference = resolve(&mut inputs, &inst, "--reference", &a.reference)?.measure;
    let alphabet = Some(inst.alphabet().as_ref());
    let w = solve_beta(&inst.lm, model, &reference, a.gamma)
        .map_err(|e| CliError::from_core(&format!("{}: solve-beta", inst.path), e, alphabet))?;
    let sup = gamma_sup(&inst.lm, model, &reference)
        .map_err(|e| CliError::from_core(&format!("{}: solve-beta", inst.path), e, alphabet))?;
    done(
        inputs,
        SolveBetaOut {
            alphabet: inst.alphabet().labels().to_vec(),
            gamma_requested: Real(a.gamma),
            gamma_sup: Real(sup),
            tilt: TiltOut::new(&w, &label),
        },
    )
}

#[derive(Serialize)]
pub struct TiltCmdOut {
    pub alphabet: Vec<String>,
    pub tilt: TiltOut,
    pub expected_loss_reference: Real,
    pub expected_loss_tilt: Real,
    pub dual_residual_forward: Real,
    pub dual_residual_reverse: Real,
}

pub fn tilt_cmd(a: &TiltArgs) -> CliResult<Outcome<TiltCmdOut>> {
    let mut inputs = Inputs::default();
    let inst = Instance::load(&mut inputs, &a.common.instance)?;
    let (model, label) = inst.model_index(a.common.model.as_deref())?;
    let reference = resolve(&mut inputs, &inst, "--reference", &a.reference)?.measure;
    let alphabet = Some(inst.alphabet().as_ref());
    let core = |e| CliError::from_core(&format!("{}: tilt", inst.path), e, alphabet);
    let w = tilt(&inst.lm, model, &reference, a.beta).map_err(core)?;
    let (r1, r2) = dual_identities(&w, &inst.lm).map_err(core)?;
    done(
        inputs,
        TiltCmdOut {
            alphabet: inst.alphabet().labels().to_vec(),
            expected_loss_reference: Real(expected_loss(&inst.lm, model, &reference).map_err(core)?),
            expected_loss_tilt: Real(expected_loss(&inst.lm, model, w.measure()).map_err(core)?),
            tilt: TiltOut::new(&w, &label),
            dual_residual_forward: Real(r1),
            dual_residual_reverse: Real(r2),
        },
    )
}

#[derive(Serialize)]
pub struct DecomposeOut {
    pub alphabet: Vec<String>,
    /// `measures`, or `datasets` when both sides are dataset files.
    pub form: &'static str,
    pub p1: Vec<Real>,
    pub p2: Vec<Real>,
    pub empirical_risk_difference: Option<Real>,
    pub tilt: TiltOut,
    pub decomposition: SensitivityOut,
}

pub fn decompose_cmd(a: &DecomposeArgs) -> CliResult<Outcome<DecomposeOut>> {
    let mut inputs = Inputs::default();
    let inst = Instance::load(&mut inputs, &a.common.instance)?;
    let (model, label) = inst.model_index(a.common.model.as_deref())?;
    let p1 = resolve(&mut inputs, &inst, "--p1", &a.p1)?;
    let p2 = resolve(&mut inputs, &inst, "--p2", &a.p2)?;
    let reference = resolve_reference(&mut inputs, &inst, &a.reference, &p1, &p2)?;
    require_dominated("--p1", &p1.measure, "the reference", &reference)?;
    require_dominated("--p2", &p2.measure, "the reference", &reference)?;
    let w = temperature(&a.temperature, &inst, model, &reference)?;
    let alphabet = Some(inst.alphabet().as_ref());
    let core = |e| CliError::from_core(&format!("{}: decompose", inst.path), e, alphabet);
    let (form, report, erd) = match (&p1.dataset, &p2.dataset) {
        (Some(z1), Some(z2)) => {
            let r = empirical_sensitivity(&inst.lm, &w, z1, z2).map_err(core)?;
            let diff = empirical_risk(&inst.lm, z1, model).map_err(core)?
                - empirical_risk(&inst.lm, z2, model).map_err(core)?;
            ("datasets", r, Some(Real(diff)))
        }
        _ => (
            "measures",
            sensitivity_closed_form(&inst.lm, &w, &p1.measure, &p2.measure).map_err(core)?,
            None,
        ),
    };
    done(
        inputs,
        DecomposeOut {
            alphabet: inst.alphabet().labels().to_vec(),
            form,
            p1: reals(p1.measure.weights()),
            p2: reals(p2.measure.weights()),
            empirical_risk_difference: erd,
            tilt: TiltOut::new(&w, &label),
            decomposition: SensitivityOut::from(&report),
        },
    )
}

#[derive(Serialize)]
pub struct GapOut {
    pub alphabet: Vec<String>,
    pub model: String,
    pub dataset_length: usize,
    pub population_risk: Real,
    pub empirical_risk: Real,
    pub gap: Real,
    pub kl_type_to_pz: Real,
    pub pz: Vec<Real>,
    pub dataset_type: Vec<Real>,
    pub decomposition: SensitivityOut,
}

pub fn gap_cmd(a: &GapArgs) -> CliResult<Outcome<GapOut>> {
    let mut inputs = Inputs::default();
    let inst = Instance::load(&mut inputs, &a.common.instance)?;
    let (model, label) = inst.model_index(a.common.model.as_deref())?;
    let z = load_dataset(&mut inputs, &a.dataset, inst.alphabet())?;
    let pz = resolve(&mut inputs, &inst, "--pz", &a.pz)?.measure;
    let t = type_of(&z).into_measure();
    let alphabet = Some(inst.alphabet().as_ref());
    let core = |e| CliError::from_core(&format!("{}: gap", inst.path), e, alphabet);
    let report = match &a.reference {
        None => {
            require_dominated("the dataset type", &t, "--pz", &pz)?;
            let w = temperature(&a.temperature, &inst, model, &pz)?;
            let beta = w.beta().finite().ok_or_else(|| {
                CliError::Infeasible("gap: the budget gives an infinite β; use a positive --gamma or --beta".into())
            })?;
            gap_decomposition_pz(&inst.lm, model, &pz, &z, beta).map_err(core)?
        }
        Some(sel) => {
            let reference = resolve(&mut inputs, &inst, "--reference", sel)?.measure;
            require_dominated("the dataset type", &t, "the reference", &reference)?;
            require_dominated("--pz", &pz, "the reference", &reference)?;
            let w = temperature(&a.temperature, &inst, model, &reference)?;
            gap_decomposition_general(&inst.lm, model, &pz, &z, &w).map_err(core)?
        }
    };
    done(
        inputs,
        GapOut {
            alphabet: inst.alphabet().labels().to_vec(),
            model: label,
            dataset_length: z.len(),
            population_risk: Real(expected_loss(&inst.lm, model, &pz).map_err(core)?),
            empirical_risk: Real(empirical_risk(&inst.lm, &z, model).map_err(core)?),
            gap: Real(report.g_direct),
            kl_type_to_pz: Real(kl_divergence(&t, &pz).map_err(core)?),
            pz: reals(pz.weights()),
            dataset_type: reals(t.weights()),
            decomposition: SensitivityOut::from(&report),
        },
    )
}

#[derive(Serialize)]
pub struct GibbsOut {
    pub models: Vec<String>,
    pub lambda: Real,
    pub n: usize,
    pub enumeration_cap: u64,
    pub datasets: usize,
    pub prior: Vec<Real>,
    pub pz: Vec<Real>,
    pub model_marginal: Vec<Real>,
    pub doubly_expected_gap: Real,
    pub mutual_info: Real,
    pub lautum_info: Real,
    pub information_form: Real,
    pub residual: Real,
}

pub fn gibbs_audit_cmd(a: &GibbsAuditArgs) -> CliResult<Outcome<GibbsOut>> {
    let mut inputs = Inputs::default();
    let inst = Instance::load(&mut inputs, &a.instance)?;
    let models = inst.lm.models().clone();
    let prior = match a.prior.as_str() {
        "uniform" => DiscreteMeasure::uniform(models.clone()),
        s => {
            let list = s.strip_prefix("weights:").ok_or_else(|| {
                CliError::input(format!(
                    "--prior: expected `uniform` or `weights:W1,W2,...`, found `{s}`"
                ))
            })?;
            let w = parse_weights("--prior", list)?;
            if w.len() != models.size() {
                return Err(CliError::input(format!(
                    "--prior: expected {} weights (one per model), found {}",
                    models.size(),
                    w.len()
                )));
            }
            DiscreteMeasure::new(models.clone(), w).map_err(|e| CliError::input(format!("--prior: {e}")))?
        }
    };
    let pz = resolve(&mut inputs, &inst, "--pz", &a.pz)?.measure;
    let core = |e| CliError::from_core(&format!("{}: gibbs-audit", inst.path), e, None);
    let g = gibbs_posterior(&inst.lm, &prior, a.lambda, a.n, a.enum_cap).map_err(core)?;
    let audit = gibbs_audit(&g, &pz).map_err(core)?;
    let marginal = model_marginal(g.algorithm(), &pz).map_err(core)?;
    done(
        inputs,
        GibbsOut {
            models: models.labels().to_vec(),
            lambda: Real(audit.lambda),
            n: a.n,
            enumeration_cap: a.enum_cap,
            datasets: audit.datasets,
            prior: reals(prior.weights()),
            pz: reals(pz.weights()),
            model_marginal: reals(marginal.weights()),
            doubly_expected_gap: Real(audit.doubly_expected_direct),
            mutual_info: Real(audit.mutual_info),
            lautum_info: Real(audit.lautum_info),
            information_form: Real(audit.information_form),
            residual: Real(audit.identity_residual),
        },
    )
}

#[derive(Serialize)]
pub struct VerifyOut {
    pub spec: InstanceSpec,
    pub passed: bool,
    pub failures: usize,
    pub summary: VerificationSummary,
}

pub fn verify_cmd(a: &VerifyArgs) -> CliResult<Outcome<VerifyOut>> {
    let mut inputs = Inputs::default();
    let mut spec = match &a.spec {
        Some(path) => {
            let text = inputs.read("spec", path)?;
            serde_json::from_str::<InstanceSpec>(&text).map_err(|e| CliError::input(format!("{path}: {e}")))?
        }
        None => InstanceSpec::default(),
    };
    macro_rules! set {
        ($flag:expr => $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    set!(a.trials => spec.trials);
    set!(a.seed => spec.seed);
    set!(a.min_alphabet => spec.alphabet_size.0);
    set!(a.max_alphabet => spec.alphabet_size.1);
    set!(a.min_models => spec.model_count.0);
    set!(a.max_models => spec.model_count.1);
    set!(a.loss_max => spec.loss_max);
    set!(a.beta_min => spec.beta_range.0);
    set!(a.beta_max => spec.beta_range.1);
    set!(a.max_dataset_len => spec.max_dataset_len);
    set!(a.threshold => spec.threshold);
    let summary = run_suite(&spec).map_err(|e| CliError::from_core("verify", e, None))?;
    let failures = summary.failure_count();
    Ok(Outcome {
        inputs,
        failure: (failures > 0).then_some(CliError::VerificationFailed { failures }),
        result: VerifyOut {
            spec,
            passed: failures == 0,
            failures,
            summary,
        },
    })
}
