use anyhow::Context;
use clap::{Args, Subcommand};
use minmax_core::problems::container::{write_instance, DenseConstraint, StoredInstance};
use minmax_core::problems::{pc, qvm, trr, Instance};
use minmax_core::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub family: FamilyCmd,
}

#[derive(Subcommand)]
pub enum FamilyCmd {
    /// Quadratic vector min-max over simplex sets.
    Qvm {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        l: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Target λ_max of each ∇²g_i.
        #[arg(long = "big-m", default_value_t = 10.0)]
        big_m: f64,
        /// Target −λ_min of each ∇²g_i.
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 0.05)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Attach a random equality-constraint block with this many rows; b
        /// is made consistent with a random feasible point.
        #[arg(long)]
        constraints: Option<usize>,
        #[arg(long, default_value_t = 7)]
        constraint_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Truncated robust regression from a LIBSVM file or synthetic data.
    Trr {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 20)]
        features: usize,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Ingest this LIBSVM file instead of generating synthetic data.
        #[arg(long)]
        from_libsvm: Option<PathBuf>,
        /// Also write the data as LIBSVM text here.
        #[arg(long)]
        emit_libsvm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Power control with a jammer.
    Pc {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(args: GenerateArgs) -> anyhow::Result<u8> {
    match args.family {
        FamilyCmd::Qvm {
            n,
            l,
            k,
            big_m,
            m,
            density,
            seed,
            constraints,
            constraint_seed,
            out,
        } => {
            let inst = qvm::qvm_generate(n, l, k, big_m, m, density, seed)
                .context("qvm generation failed")?;
            let constraint = match constraints {
                None => None,
                Some(rows) => {
                    anyhow::ensure!(rows >= 1, "constraint row count must be positive");
                    Some(random_constraint(rows, n, constraint_seed))
                }
            };
            let stored = StoredInstance {
                instance: Instance::Qvm(inst),
                constraint,
            };
            write_instance(&out, &stored)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        FamilyCmd::Trr {
            points,
            features,
            density,
            seed,
            from_libsvm,
            emit_libsvm,
            out,
        } => {
            let inst = match &from_libsvm {
                Some(path) => trr::trr_load(path)
                    .with_context(|| format!("failed to load {}", path.display()))?,
                None => trr::trr_generate_synthetic(points, features, density, seed)
                    .context("trr generation failed")?,
            };
            if let Some(path) = emit_libsvm {
                std::fs::write(&path, trr::emit_libsvm(&inst.features, &inst.labels))?;
                println!("wrote {}", path.display());
            }
            let stored = StoredInstance {
                instance: Instance::Trr(inst),
                constraint: None,
            };
            write_instance(&out, &stored)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        FamilyCmd::Pc { n, k, seed, out } => {
            let inst = pc::pc_generate(n, k, seed).context("pc generation failed")?;
            let stored = StoredInstance {
                instance: Instance::Pc(inst),
                constraint: None,
            };
            write_instance(&out, &stored)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}

/// Random dense rows with b = A·(random simplex point), so the feasible set
/// intersects the simplex.
pub fn random_constraint(rows: usize, n: usize, seed: u64) -> DenseConstraint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let feasible = sample::sample_simplex(n, &mut rng);
    let b = a
        .iter()
        .map(|row| row.iter().zip(&feasible).map(|(r, f)| r * f).sum())
        .collect();
    DenseConstraint { a, b }
}
