package garage;

public class Engine {
    private int horsepower;
}
