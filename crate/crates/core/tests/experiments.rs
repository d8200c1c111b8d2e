use std::path::Path;

use puzzlebench::agents::{AgentSpec, EndpointConfig};
use puzzlebench::config::ExperimentFile;

fn dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/experiments"))
}

#[test]
fn shipped_experiment_files_expand() {
    let sizes = [("hanoi_sweep.toml", 48), ("river_grid.toml", 9), ("remote_hanoi.toml", 16)];
    for (name, expected) in sizes {
        let configs = ExperimentFile::load(&dir().join(name)).unwrap().expand().unwrap();
        assert_eq!(configs.len(), expected, "{name}");
    }
}

#[test]
fn example_endpoint_names_a_key_variable_only() {
    let path = dir().join("endpoint.example.toml");
    let endpoint = EndpointConfig::load(&path).unwrap();
    assert_eq!(endpoint.api_key_env.as_deref(), Some("PUZZLEBENCH_API_KEY"));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains("api_key ="));

    let file = ExperimentFile::load(&dir().join("remote_hanoi.toml")).unwrap();
    let AgentSpec::Remote { endpoint, .. } = &file.experiment[0].agent.0 else { panic!("not remote") };
    assert_eq!(endpoint, &path);
}
