//! File schemas shared by every module and the CLI.
//!
//! Matrices travel as `{"rows": r, "cols": c, "data": [[re, im], ...]}`
//! (row-major); density operators add `"substate"`, subalgebras carry their
//! block list plus basis unitary, channels their Kraus list.

use crate::algebra::{GeneratorMode, SubalgebraStructure};
use crate::dilation::StinespringIsometry;
use crate::linops::{c, CMat, DensityOperator};
use crate::resource::QuantumChannel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, JsonError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDto {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDto {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(JsonError::Schema(format!(
                "matrix data length {} ≠ {}×{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().any(|e| !e[0].is_finite() || !e[1].is_finite()) {
            return Err(JsonError::Schema("non-finite matrix entry".into()));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let e = self.data[i * self.cols + j];
            c(e[0], e[1])
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityDto {
    #[serde(flatten)]
    pub matrix: MatrixDto,
    pub substate: bool,
}

impl DensityDto {
    pub fn from_density(rho: &DensityOperator) -> Self {
        Self {
            matrix: MatrixDto::from_matrix(rho.matrix()),
            substate: rho.substate_allowed(),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        let m = self.matrix.to_matrix()?;
        DensityOperator::new(m, self.substate)
            .map_err(|e| JsonError::Schema(format!("invalid density operator: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubalgebraDto {
    pub dim: usize,
    pub blocks: Vec<[usize; 2]>,
    pub unitary: MatrixDto,
}

impl SubalgebraDto {
    pub fn from_structure(s: &SubalgebraStructure) -> Self {
        Self {
            dim: s.ambient_dim(),
            blocks: s.blocks().iter().map(|&(m, n)| [m, n]).collect(),
            unitary: MatrixDto::from_matrix(s.basis_unitary()),
        }
    }

    pub fn to_structure(&self) -> Result<SubalgebraStructure> {
        let u = self.unitary.to_matrix()?;
        SubalgebraStructure::new(
            self.dim,
            self.blocks.iter().map(|b| (b[0], b[1])).collect(),
            u,
        )
        .map_err(|e| JsonError::Schema(format!("invalid subalgebra: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorsDto {
    pub generators: Vec<MatrixDto>,
    /// "algebra" or "commutant"
    pub mode: String,
}

impl GeneratorsDto {
    pub fn mode(&self) -> Result<GeneratorMode> {
        match self.mode.as_str() {
            "algebra" => Ok(GeneratorMode::Algebra),
            "commutant" => Ok(GeneratorMode::Commutant),
            other => Err(JsonError::Schema(format!(
                "mode must be \"algebra\" or \"commutant\", got {other:?}"
            ))),
        }
    }

    pub fn matrices(&self) -> Result<Vec<CMat>> {
        self.generators.iter().map(|m| m.to_matrix()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsometryDto {
    #[serde(flatten)]
    pub matrix: MatrixDto,
    pub dim_in: usize,
    pub dim_env: usize,
}

impl IsometryDto {
    pub fn from_isometry(v: &StinespringIsometry) -> Self {
        Self {
            matrix: MatrixDto::from_matrix(v.matrix()),
            dim_in: v.dim_in(),
            dim_env: v.dim_env(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDto {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixDto>,
}

impl ChannelDto {
    pub fn from_channel(phi: &QuantumChannel) -> Self {
        Self {
            dim_in: phi.dim_in,
            dim_out: phi.dim_out,
            kraus: phi.kraus.iter().map(MatrixDto::from_matrix).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let kraus: Result<Vec<CMat>> = self.kraus.iter().map(|k| k.to_matrix()).collect();
        QuantumChannel::from_kraus(self.dim_in, self.dim_out, kraus?)
            .map_err(|e| JsonError::Schema(format!("invalid channel: {e}")))
    }
}

/// Full certificate export for audit: primal point, dual blocks, gap and
/// residual, alongside the solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDto {
    pub value: f64,
    pub gap: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub tol: f64,
    pub primal: Vec<f64>,
    pub dual_psd: Vec<MatrixDto>,
    pub dual_soc: Vec<Vec<f64>>,
    pub dual_lin: Vec<f64>,
}

impl CertificateDto {
    pub fn from_certificate(cert: &crate::solver::SolverCertificate) -> Self {
        Self {
            value: cert.value,
            gap: cert.gap,
            dual_residual: cert.dual_residual,
            iterations: cert.iterations,
            tol: cert.tol,
            primal: cert.primal.clone(),
            dual_psd: cert.dual_psd.iter().map(MatrixDto::from_matrix).collect(),
            dual_soc: cert.dual_soc.clone(),
            dual_lin: cert.dual_lin.clone(),
        }
    }
}

/// One output row shared by report JSON and CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub quantity: String,
    pub value_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub route: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_gap: Option<f64>,
}

impl ReportRow {
    pub fn csv_header() -> &'static str {
        "quantity,value_bits,n,epsilon,route,certificate_gap"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.quantity,
            fmt_f64(self.value_bits),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.epsilon.map(fmt_f64).unwrap_or_default(),
            self.route,
            self.certificate_gap.map(fmt_f64).unwrap_or_default(),
        )
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.9}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_util::{random_density, rng_from_seed};
    use proptest::prelude::*;

    #[test]
    fn matrix_schema_shape() {
        let mut rng = rng_from_seed(1);
        let rho = random_density(3, 3, &mut rng);
        let dto = DensityDto::from_density(&rho);
        let s = serde_json::to_string(&dto).unwrap();
        assert!(s.contains("\"rows\":3"));
        assert!(s.contains("\"substate\":false"));
        let back = serde_json::from_str::<DensityDto>(&s)
            .unwrap()
            .to_density()
            .unwrap();
        assert!(crate::linops::max_abs_diff(back.matrix(), rho.matrix()) < 1e-15);
    }

    #[test]
    fn subalgebra_schema_roundtrip() {
        let s = SubalgebraStructure::make_tensor_factor(2, 3, true);
        let dto = SubalgebraDto::from_structure(&s);
        let text = serde_json::to_string(&dto).unwrap();
        let back = serde_json::from_str::<SubalgebraDto>(&text)
            .unwrap()
            .to_structure()
            .unwrap();
        assert_eq!(back.blocks(), s.blocks());
    }

    #[test]
    fn channel_schema_roundtrip() {
        let n = SubalgebraStructure::make_diagonal(2);
        let plus = DensityOperator::pure(&crate::linops::CVec::from_vec(vec![
            crate::linops::cr(1.0),
            crate::linops::cr(1.0),
        ]))
        .unwrap();
        let phi = crate::resource::build_dio_dilution(&plus, &n, 2).unwrap();
        let dto = ChannelDto::from_channel(&phi);
        let text = serde_json::to_string(&dto).unwrap();
        let back = serde_json::from_str::<ChannelDto>(&text)
            .unwrap()
            .to_channel()
            .unwrap();
        let mut rng = rng_from_seed(2);
        let x = random_density(2, 2, &mut rng);
        assert!(
            crate::linops::max_abs_diff(&phi.apply(x.matrix()), &back.apply(x.matrix())) < 1e-10
        );
    }

    #[test]
    fn report_row_csv() {
        let row = ReportRow {
            quantity: "DmaxEps".into(),
            value_bits: 1.0,
            n: Some(2),
            epsilon: Some(0.1),
            route: "direct".into(),
            certificate_gap: Some(1e-8),
        };
        let line = row.to_csv();
        assert_eq!(line.split(',').count(), 6);
    }

    proptest! {
        #[test]
        fn matrix_roundtrip_is_exact(rows in 1usize..5, cols in 1usize..5, seed in 0u64..1000) {
            let mut rng = rng_from_seed(seed);
            let m = crate::rand_util::ginibre(rows, cols, &mut rng);
            let dto = MatrixDto::from_matrix(&m);
            let back = dto.to_matrix().unwrap();
            prop_assert!(crate::linops::max_abs_diff(&m, &back) == 0.0);
        }
    }
}
