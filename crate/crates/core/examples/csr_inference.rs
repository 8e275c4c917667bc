//! Converts a pruned network to CSR, checks it against the dense engine and
//! round-trips it through a SPIF file.
//!
//! cargo run --release --example csr_inference

use sparsebench::nn::{Architecture, ModelKind, ModelMeta};
use sparsebench::prune::SparsityMask;
use sparsebench::sparse::{deserialize_sparse, serialize_sparse, CsrMatrix, DenseEngine, SparseModel};

fn main() -> sparsebench::Result<()> {
    let m = CsrMatrix::from_dense(3, 4, &[0.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0])?;
    println!("values {:?}\ncol_idx {:?}\nrow_ptr {:?}", m.values(), m.col_idx(), m.row_ptr());
    println!("A * [1 1 1 1] = {:?}", m.spmv(&[1.0; 4])?);

    let arch = Architecture { kind: ModelKind::Lstm, hidden: vec![32], window: 5 };
    let mut model = arch.build(20, 3, 7);
    SparsityMask::dense(&model).grow(&model, 0.65)?.apply(&mut model);
    model.round_to_f32();

    let sparse = SparseModel::from_model(&model, ModelMeta::default())?;
    let dense = DenseEngine::from_model(&model, ModelMeta::default())?;
    let x: Vec<f32> = (0..sparse.input_len()).map(|i| ((i * 37 % 11) as f32 - 5.0) / 5.0).collect();
    println!("sparse {:?}\ndense  {:?}", sparse.infer(&x)?, dense.infer(&x)?);

    let path = std::env::temp_dir().join("csr_inference_example.spif");
    let payload = serialize_sparse(&sparse, &path)?;
    println!("SPIF weight payload {payload} B vs dense {} B", dense.weight_bytes());
    let back = deserialize_sparse(&path)?;
    assert_eq!(back.infer(&x)?, sparse.infer(&x)?);
    std::fs::remove_file(&path)?;
    Ok(())
}
