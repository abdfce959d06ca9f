package garage;

public class BMW extends Car {
    private Type type;
    private Engine engine;
    private Body body;

    public Engine getEngine() {
        return engine;
    }
}
